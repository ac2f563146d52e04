/**
 * RFB 3.8 client core: handshake, Raw-encoding framebuffer decode,
 * pointer/key event encoding.
 *
 * Transport-agnostic: bytes in via feed(), bytes out via the send
 * callback, so the same state machine runs over a WebSocket in the
 * browser and over anything byte-shaped in tests. v1 decodes Raw only;
 * the bridge is transparent, so richer encodings can be negotiated
 * later without touching it.
 */

const VERSION = "RFB 003.008\n";
const SECURITY_NONE = 1;
const ENCODING_RAW = 0;

// the one pixel format we request: 32bpp little-endian truecolour,
// red<<16 | green<<8 | blue (so wire bytes are B,G,R,X)
const PIXEL_FORMAT = new Uint8Array([
  32, 24, 0, 1,
  0, 255, 0, 255, 0, 255,
  16, 8, 0,
  0, 0, 0,
]);

type Phase =
  | "version"
  | "security-list"
  | "security-result"
  | "server-init"
  | "messages"
  | "failed";

export interface RfbHandlers {
  /** framebuffer dimensions are known and the update loop has started */
  onReady?(width: number, height: number, name: string): void;
  /** one decoded rectangle of RGBA pixels */
  onRect?(x: number, y: number, w: number, h: number, rgba: Uint8ClampedArray): void;
  /** a full FramebufferUpdate message has been processed */
  onFrame?(): void;
  onError?(message: string): void;
}

export class RfbClient {
  width = 0;
  height = 0;
  serverName = "";

  private phase: Phase = "version";
  private buffer = new Uint8Array(0);
  private rectsPending = 0;
  private rect: { x: number; y: number; w: number; h: number } | null = null;

  constructor(
    private readonly send: (data: Uint8Array) => void,
    private readonly handlers: RfbHandlers = {},
  ) {}

  /** Push wire bytes into the state machine. */
  feed(data: Uint8Array): void {
    if (this.phase === "failed") return;
    const merged = new Uint8Array(this.buffer.length + data.length);
    merged.set(this.buffer);
    merged.set(data, this.buffer.length);
    this.buffer = merged;
    try {
      this.advance();
    } catch (err) {
      this.fail(err instanceof Error ? err.message : String(err));
    }
  }

  pointerEvent(x: number, y: number, buttonMask: number): void {
    const msg = new Uint8Array(6);
    const view = new DataView(msg.buffer);
    view.setUint8(0, 5);
    view.setUint8(1, buttonMask);
    view.setUint16(2, clamp(x, 0, this.width - 1));
    view.setUint16(4, clamp(y, 0, this.height - 1));
    this.send(msg);
  }

  keyEvent(keysym: number, down: boolean): void {
    const msg = new Uint8Array(8);
    const view = new DataView(msg.buffer);
    view.setUint8(0, 4);
    view.setUint8(1, down ? 1 : 0);
    view.setUint32(4, keysym);
    this.send(msg);
  }

  requestUpdate(incremental: boolean): void {
    const msg = new Uint8Array(10);
    const view = new DataView(msg.buffer);
    view.setUint8(0, 3);
    view.setUint8(1, incremental ? 1 : 0);
    view.setUint16(2, 0);
    view.setUint16(4, 0);
    view.setUint16(6, this.width);
    view.setUint16(8, this.height);
    this.send(msg);
  }

  // -- state machine ---------------------------------------------------------

  private advance(): void {
    let progressed = true;
    while (progressed) {
      progressed = false;
      switch (this.phase) {
        case "version": {
          const greeting = this.take(12);
          if (!greeting) return;
          const text = new TextDecoder().decode(greeting);
          if (!text.startsWith("RFB 003.")) {
            throw new Error(`not an RFB server: ${JSON.stringify(text)}`);
          }
          this.send(new TextEncoder().encode(VERSION));
          this.phase = "security-list";
          progressed = true;
          break;
        }
        case "security-list": {
          if (this.buffer.length < 1) return;
          const count = this.buffer[0];
          if (count === 0) {
            // connection failed: u32 reason length + reason
            const reason = this.takeReason(1);
            if (reason === null) return;
            throw new Error(`server refused connection: ${reason}`);
          }
          const list = this.take(1 + count);
          if (!list) return;
          if (!list.slice(1).includes(SECURITY_NONE)) {
            throw new Error("server demands authentication (unsupported)");
          }
          this.send(new Uint8Array([SECURITY_NONE]));
          this.phase = "security-result";
          progressed = true;
          break;
        }
        case "security-result": {
          const result = this.take(4);
          if (!result) return;
          if (new DataView(result.buffer, result.byteOffset).getUint32(0) !== 0) {
            const reason = this.takeReason(0);
            throw new Error(`security handshake failed: ${reason ?? ""}`);
          }
          this.send(new Uint8Array([1])); // ClientInit: shared session
          this.phase = "server-init";
          progressed = true;
          break;
        }
        case "server-init": {
          if (this.buffer.length < 24) return;
          const view = new DataView(this.buffer.buffer, this.buffer.byteOffset);
          const nameLength = view.getUint32(20);
          const init = this.take(24 + nameLength);
          if (!init) return;
          const initView = new DataView(init.buffer, init.byteOffset);
          this.width = initView.getUint16(0);
          this.height = initView.getUint16(2);
          this.serverName = new TextDecoder().decode(init.slice(24));

          this.sendSetPixelFormat();
          this.sendSetEncodings();
          this.requestUpdate(false);
          this.phase = "messages";
          this.handlers.onReady?.(this.width, this.height, this.serverName);
          progressed = true;
          break;
        }
        case "messages":
          progressed = this.advanceMessage();
          break;
        case "failed":
          return;
      }
    }
  }

  private advanceMessage(): boolean {
    if (this.rect) return this.advanceRect();
    if (this.rectsPending > 0) return this.advanceRectHeader();
    if (this.buffer.length < 1) return false;

    const kind = this.buffer[0];
    switch (kind) {
      case 0: {
        // FramebufferUpdate: pad + u16 number-of-rectangles
        const header = this.take(4);
        if (!header) return false;
        this.rectsPending = new DataView(
          header.buffer,
          header.byteOffset,
        ).getUint16(2);
        if (this.rectsPending === 0) this.finishFrame();
        return true;
      }
      case 1: {
        // SetColourMapEntries: pad + first + count + count * 6 bytes
        if (this.buffer.length < 6) return false;
        const count = new DataView(
          this.buffer.buffer,
          this.buffer.byteOffset,
        ).getUint16(4);
        return this.take(6 + count * 6) !== null;
      }
      case 2:
        return this.take(1) !== null; // Bell
      case 3: {
        // ServerCutText: pad3 + u32 length + text
        if (this.buffer.length < 8) return false;
        const length = new DataView(
          this.buffer.buffer,
          this.buffer.byteOffset,
        ).getUint32(4);
        return this.take(8 + length) !== null;
      }
      default:
        throw new Error(`unknown server message ${kind}`);
    }
  }

  private advanceRectHeader(): boolean {
    const header = this.take(12);
    if (!header) return false;
    const view = new DataView(header.buffer, header.byteOffset);
    const encoding = view.getInt32(8);
    if (encoding !== ENCODING_RAW) {
      throw new Error(`server sent unsupported encoding ${encoding}`);
    }
    this.rect = {
      x: view.getUint16(0),
      y: view.getUint16(2),
      w: view.getUint16(4),
      h: view.getUint16(6),
    };
    return true;
  }

  private advanceRect(): boolean {
    const rect = this.rect!;
    const byteLength = rect.w * rect.h * 4;
    const data = this.take(byteLength);
    if (!data) return false;

    // wire pixels are B,G,R,X (little-endian r<<16|g<<8|b)
    const rgba = new Uint8ClampedArray(rect.w * rect.h * 4);
    for (let i = 0; i < rect.w * rect.h; i++) {
      rgba[i * 4] = data[i * 4 + 2];
      rgba[i * 4 + 1] = data[i * 4 + 1];
      rgba[i * 4 + 2] = data[i * 4];
      rgba[i * 4 + 3] = 255;
    }
    this.handlers.onRect?.(rect.x, rect.y, rect.w, rect.h, rgba);

    this.rect = null;
    this.rectsPending -= 1;
    if (this.rectsPending === 0) this.finishFrame();
    return true;
  }

  private finishFrame(): void {
    this.handlers.onFrame?.();
    this.requestUpdate(true);
  }

  private sendSetPixelFormat(): void {
    const msg = new Uint8Array(20);
    msg[0] = 0;
    msg.set(PIXEL_FORMAT, 4);
    this.send(msg);
  }

  private sendSetEncodings(): void {
    const msg = new Uint8Array(8);
    const view = new DataView(msg.buffer);
    view.setUint8(0, 2);
    view.setUint16(2, 1);
    view.setInt32(4, ENCODING_RAW);
    this.send(msg);
  }

  private take(count: number): Uint8Array | null {
    if (this.buffer.length < count) return null;
    const out = this.buffer.slice(0, count);
    this.buffer = this.buffer.slice(count);
    return out;
  }

  private takeReason(offset: number): string | null {
    if (this.buffer.length < offset + 4) return null;
    const view = new DataView(this.buffer.buffer, this.buffer.byteOffset);
    const length = view.getUint32(offset);
    const all = this.take(offset + 4 + length);
    if (!all) return null;
    return new TextDecoder().decode(all.slice(offset + 4));
  }

  private fail(message: string): void {
    this.phase = "failed";
    this.handlers.onError?.(message);
  }
}

function clamp(value: number, min: number, max: number): number {
  return Math.max(min, Math.min(max, Math.round(value)));
}
