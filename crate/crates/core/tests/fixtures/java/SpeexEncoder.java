package org.xiph.speex;

/**
 * Main Speex encoder class.
 */
public class SpeexEncoder {

  private int frameSize;
  private byte[] buffer;

  /**
   * Creates a Speex packet from the given audio frame.
   */
  public byte[] createSpeexPacket(short[] frame) {
    encodeFrame(frame);
    return buffer;
  }

  /**
   * Returns the size of a frame.
   */
  public int getFrameSize() {
    return frameSize;
  }

  /**
   * Sets the size of a frame.
   */
  public void setFrameSize(int frameSize) {
    this.frameSize = frameSize;
  }
}
