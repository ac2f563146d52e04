/**
 * RFB state machine unit tests against scripted server bytes, mirroring
 * the wire behavior of the lab fixture's RFB server.
 */

import { describe, expect, it } from "vitest";

import { RfbClient, RfbHandlers } from "../src/rfb";
import { keysymFor } from "../src/screen";

function be16(value: number): number[] {
  return [(value >> 8) & 0xff, value & 0xff];
}

function be32(value: number): number[] {
  return [
    (value >>> 24) & 0xff,
    (value >>> 16) & 0xff,
    (value >>> 8) & 0xff,
    value & 0xff,
  ];
}

const PIXEL_FORMAT = [
  32, 24, 0, 1,
  ...be16(255), ...be16(255), ...be16(255),
  16, 8, 0,
  0, 0, 0,
];

function serverInit(width: number, height: number, name = "mock"): number[] {
  const nameBytes = Array.from(new TextEncoder().encode(name));
  return [
    ...be16(width),
    ...be16(height),
    ...PIXEL_FORMAT,
    ...be32(nameBytes.length),
    ...nameBytes,
  ];
}

/** 2x2 red/green/blue/white framebuffer in wire format (B,G,R,X). */
function rawUpdate(): number[] {
  const pixels = [
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [255, 255, 255],
  ];
  const data = pixels.flatMap(([r, g, b]) => [b, g, r, 0]);
  return [
    0, 0, ...be16(1), // FramebufferUpdate, 1 rect
    ...be16(0), ...be16(0), ...be16(2), ...be16(2), ...be32(0), // Raw
    ...data,
  ];
}

interface Harness {
  client: RfbClient;
  sent: Uint8Array[];
  rects: { x: number; y: number; w: number; h: number; rgba: number[] }[];
  errors: string[];
  ready: boolean;
}

function harness(extra: RfbHandlers = {}): Harness {
  const state: Harness = {
    client: undefined as unknown as RfbClient,
    sent: [],
    rects: [],
    errors: [],
    ready: false,
  };
  state.client = new RfbClient((data) => state.sent.push(data), {
    onReady: (w, h, n) => {
      state.ready = true;
      extra.onReady?.(w, h, n);
    },
    onRect: (x, y, w, h, rgba) =>
      state.rects.push({ x, y, w, h, rgba: Array.from(rgba) }),
    onError: (message) => state.errors.push(message),
    onFrame: extra.onFrame,
  });
  return state;
}

function runHandshake(h: Harness, chunkSize = Infinity): void {
  const stream = [
    ...Array.from(new TextEncoder().encode("RFB 003.008\n")),
    1, 1, // one security type: None
    ...be32(0), // SecurityResult OK
    ...serverInit(2, 2),
    ...rawUpdate(),
  ];
  for (let i = 0; i < stream.length; i += chunkSize) {
    h.client.feed(Uint8Array.from(stream.slice(i, i + chunkSize)));
  }
}

describe("handshake", () => {
  it("negotiates and reports the framebuffer size", () => {
    const h = harness();
    runHandshake(h);
    expect(h.errors).toEqual([]);
    expect(h.ready).toBe(true);
    expect(h.client.width).toBe(2);
    expect(h.client.height).toBe(2);
    expect(h.client.serverName).toBe("mock");
  });

  it("sends version, security choice, init, format, encodings, update request", () => {
    const h = harness();
    runHandshake(h);
    const [version, security, clientInit, setFormat, setEncodings, request] =
      h.sent;
    expect(new TextDecoder().decode(version)).toBe("RFB 003.008\n");
    expect(Array.from(security)).toEqual([1]);
    expect(Array.from(clientInit)).toEqual([1]);
    expect(setFormat[0]).toBe(0);
    expect(Array.from(setFormat.slice(4))).toEqual(PIXEL_FORMAT);
    expect(setEncodings[0]).toBe(2);
    expect(Array.from(setEncodings.slice(2, 4))).toEqual(be16(1));
    expect(Array.from(setEncodings.slice(4))).toEqual(be32(0));
    expect(request[0]).toBe(3);
    expect(request[1]).toBe(0); // first request is non-incremental
  });

  it("decodes the 2x2 raw rect into RGBA", () => {
    const h = harness();
    runHandshake(h);
    expect(h.rects).toHaveLength(1);
    const rect = h.rects[0];
    expect([rect.x, rect.y, rect.w, rect.h]).toEqual([0, 0, 2, 2]);
    expect(rect.rgba).toEqual([
      255, 0, 0, 255,
      0, 255, 0, 255,
      0, 0, 255, 255,
      255, 255, 255, 255,
    ]);
  });

  it("requests an incremental update after each frame", () => {
    const h = harness();
    runHandshake(h);
    const last = h.sent[h.sent.length - 1];
    expect(last[0]).toBe(3);
    expect(last[1]).toBe(1);
  });

  it("survives byte-at-a-time delivery", () => {
    const whole = harness();
    runHandshake(whole);
    const dribble = harness();
    runHandshake(dribble, 1);
    expect(dribble.errors).toEqual([]);
    expect(dribble.rects).toEqual(whole.rects);
    expect(dribble.sent.map((m) => Array.from(m))).toEqual(
      whole.sent.map((m) => Array.from(m)),
    );
  });
});

describe("failure paths", () => {
  it("rejects a non-RFB greeting", () => {
    const h = harness();
    h.client.feed(new TextEncoder().encode("HTTP/1.1 400\r\n"));
    expect(h.errors).toHaveLength(1);
    expect(h.errors[0]).toContain("not an RFB server");
  });

  it("surfaces the server's refusal reason", () => {
    const h = harness();
    h.client.feed(new TextEncoder().encode("RFB 003.008\n"));
    const reason = Array.from(new TextEncoder().encode("too many clients"));
    h.client.feed(Uint8Array.from([0, ...be32(reason.length), ...reason]));
    expect(h.errors[0]).toContain("too many clients");
  });

  it("rejects unsupported encodings", () => {
    const h = harness();
    runHandshake(h);
    h.client.feed(
      Uint8Array.from([
        0, 0, ...be16(1),
        ...be16(0), ...be16(0), ...be16(1), ...be16(1), ...be32(7),
      ]),
    );
    expect(h.errors[0]).toContain("unsupported encoding 7");
  });
});

describe("input events", () => {
  it("encodes pointer events with big-endian coordinates", () => {
    const h = harness();
    runHandshake(h);
    h.sent.length = 0;
    h.client.pointerEvent(1, 0, 1);
    expect(Array.from(h.sent[0])).toEqual([5, 1, ...be16(1), ...be16(0)]);
  });

  it("clamps pointer coordinates to the framebuffer", () => {
    const h = harness();
    runHandshake(h);
    h.sent.length = 0;
    h.client.pointerEvent(500, -3, 0);
    expect(Array.from(h.sent[0])).toEqual([5, 0, ...be16(1), ...be16(0)]);
  });

  it("encodes key events with the keysym", () => {
    const h = harness();
    runHandshake(h);
    h.sent.length = 0;
    h.client.keyEvent(0xff0d, true);
    h.client.keyEvent(0xff0d, false);
    expect(Array.from(h.sent[0])).toEqual([4, 1, 0, 0, ...be32(0xff0d)]);
    expect(Array.from(h.sent[1])).toEqual([4, 0, 0, 0, ...be32(0xff0d)]);
  });
});

describe("keysym mapping", () => {
  it("maps printable characters to their codepoint", () => {
    expect(keysymFor("a")).toBe(97);
    expect(keysymFor("Z")).toBe(90);
    expect(keysymFor("é")).toBe(0xe9);
  });

  it("maps named keys", () => {
    expect(keysymFor("Enter")).toBe(0xff0d);
    expect(keysymFor("ArrowLeft")).toBe(0xff51);
  });

  it("returns null for unmapped keys", () => {
    expect(keysymFor("F13")).toBeNull();
    expect(keysymFor("😀")).toBeNull();
  });
});
