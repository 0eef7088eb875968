/** Microphone capture. Collects raw PCM so the clip can be encoded as WAV client-side. */

export interface RecordedClip {
  samples: Float32Array;
  sampleRate: number;
}

export interface Recorder {
  start(): Promise<void>;
  stop(): Promise<RecordedClip>;
}

export class MicRecorder implements Recorder {
  private stream: MediaStream | null = null;
  private context: AudioContext | null = null;
  private source: MediaStreamAudioSourceNode | null = null;
  private processor: ScriptProcessorNode | null = null;
  private chunks: Float32Array[] = [];

  async start(): Promise<void> {
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: { channelCount: 1 } });
    this.context = new AudioContext();
    this.source = this.context.createMediaStreamSource(this.stream);
    // ScriptProcessorNode is deprecated but is the one capture path that needs
    // no separate worklet module; buffers arrive as Float32 PCM ready to encode.
    this.processor = this.context.createScriptProcessor(4096, 1, 1);
    this.chunks = [];
    this.processor.onaudioprocess = (event) => {
      this.chunks.push(new Float32Array(event.inputBuffer.getChannelData(0)));
    };
    this.source.connect(this.processor);
    this.processor.connect(this.context.destination);
  }

  async stop(): Promise<RecordedClip> {
    const sampleRate = this.context?.sampleRate ?? 16000;
    this.processor?.disconnect();
    this.source?.disconnect();
    this.stream?.getTracks().forEach((track) => track.stop());
    await this.context?.close().catch(() => undefined);
    const total = this.chunks.reduce((n, chunk) => n + chunk.length, 0);
    const samples = new Float32Array(total);
    let offset = 0;
    for (const chunk of this.chunks) {
      samples.set(chunk, offset);
      offset += chunk.length;
    }
    this.stream = null;
    this.context = null;
    this.source = null;
    this.processor = null;
    this.chunks = [];
    return { samples, sampleRate };
  }
}
