/**
 * Live screen view: WebSocket to the bridge, RFB client, canvas paint,
 * pointer/keyboard forwarding.
 *
 * Painting goes through a small Surface interface so the RFB plumbing
 * can be exercised without a real 2D canvas context.
 */

import { RfbClient } from "./rfb";

export interface Surface {
  resize(width: number, height: number): void;
  putRect(x: number, y: number, w: number, h: number, rgba: Uint8ClampedArray): void;
}

export class CanvasSurface implements Surface {
  private context: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const context = canvas.getContext("2d");
    if (!context) throw new Error("canvas 2d context unavailable");
    this.context = context;
  }

  resize(width: number, height: number): void {
    this.canvas.width = width;
    this.canvas.height = height;
  }

  putRect(x: number, y: number, w: number, h: number, rgba: Uint8ClampedArray): void {
    const image = this.context.createImageData(w, h);
    image.data.set(rgba);
    this.context.putImageData(image, x, y);
  }
}

export type ScreenState =
  | { kind: "connecting" }
  | { kind: "connected"; width: number; height: number; name: string }
  | { kind: "disconnected"; code: number; reason: string }
  | { kind: "error"; message: string };

export interface ScreenOptions {
  onState?(state: ScreenState): void;
  /** fires after each complete framebuffer update */
  onFrame?(): void;
}

// minimal keysym table: printable latin-1 maps to its codepoint
const KEYSYMS: Record<string, number> = {
  Enter: 0xff0d,
  Backspace: 0xff08,
  Tab: 0xff09,
  Escape: 0xff1b,
  Delete: 0xffff,
  Home: 0xff50,
  End: 0xff57,
  ArrowLeft: 0xff51,
  ArrowUp: 0xff52,
  ArrowRight: 0xff53,
  ArrowDown: 0xff54,
  Shift: 0xffe1,
  Control: 0xffe3,
  Alt: 0xffe9,
};

export function keysymFor(key: string): number | null {
  if (key.length === 1) {
    const code = key.codePointAt(0)!;
    return code <= 0xff ? code : null;
  }
  return KEYSYMS[key] ?? null;
}

export class ScreenView {
  private ws: WebSocket | null = null;
  private rfb: RfbClient | null = null;
  private buttonMask = 0;

  constructor(
    private readonly url: string,
    private readonly surface: Surface,
    private readonly options: ScreenOptions = {},
  ) {}

  connect(): void {
    this.disconnect();
    this.options.onState?.({ kind: "connecting" });

    const ws = new WebSocket(this.url, ["binary"]);
    ws.binaryType = "arraybuffer";
    this.ws = ws;

    const rfb = new RfbClient((data) => ws.send(data), {
      onReady: (width, height, name) => {
        this.surface.resize(width, height);
        this.options.onState?.({ kind: "connected", width, height, name });
      },
      onRect: (x, y, w, h, rgba) => this.surface.putRect(x, y, w, h, rgba),
      onFrame: () => this.options.onFrame?.(),
      onError: (message) => {
        this.options.onState?.({ kind: "error", message });
        this.disconnect();
      },
    });
    this.rfb = rfb;

    ws.onmessage = (event) => {
      // instanceof ArrayBuffer is realm-sensitive (jsdom vs node);
      // detect binary payloads structurally instead
      const data: unknown = event.data;
      if (typeof data === "string") return;
      if (ArrayBuffer.isView(data)) {
        rfb.feed(
          new Uint8Array(data.buffer, data.byteOffset, data.byteLength),
        );
      } else {
        rfb.feed(new Uint8Array(data as ArrayBuffer));
      }
    };
    ws.onclose = (event) => {
      if (this.ws === ws) {
        this.ws = null;
        this.options.onState?.({
          kind: "disconnected",
          code: event.code,
          reason: event.reason,
        });
      }
    };
    ws.onerror = () => {
      this.options.onState?.({ kind: "error", message: "bridge unreachable" });
    };
  }

  disconnect(): void {
    const ws = this.ws;
    this.ws = null;
    this.rfb = null;
    if (ws && ws.readyState <= WebSocket.OPEN) ws.close(1000);
  }

  get connected(): boolean {
    return this.ws !== null && this.rfb !== null;
  }

  /** Wire pointer/keyboard listeners of an element to the session. */
  attachInput(element: HTMLElement): void {
    const pointer = (event: MouseEvent, mask: number) => {
      event.preventDefault();
      this.buttonMask = mask;
      const [x, y] = this.toFramebuffer(element, event);
      this.rfb?.pointerEvent(x, y, this.buttonMask);
    };
    element.addEventListener("mousedown", (e) => pointer(e, this.buttonMask | (1 << e.button)));
    element.addEventListener("mouseup", (e) => pointer(e, this.buttonMask & ~(1 << e.button)));
    element.addEventListener("mousemove", (e) => pointer(e, this.buttonMask));
    element.addEventListener("keydown", (e) => this.key(e, true));
    element.addEventListener("keyup", (e) => this.key(e, false));
  }

  private key(event: KeyboardEvent, down: boolean): void {
    const keysym = keysymFor(event.key);
    if (keysym === null) return;
    event.preventDefault();
    this.rfb?.keyEvent(keysym, down);
  }

  private toFramebuffer(element: HTMLElement, event: MouseEvent): [number, number] {
    const rect = element.getBoundingClientRect();
    const rfb = this.rfb;
    if (!rfb || rect.width === 0 || rect.height === 0) {
      // no layout information (headless): use 1:1 coordinates
      return [event.clientX, event.clientY];
    }
    return [
      ((event.clientX - rect.left) * rfb.width) / rect.width,
      ((event.clientY - rect.top) * rfb.height) / rect.height,
    ];
  }
}
