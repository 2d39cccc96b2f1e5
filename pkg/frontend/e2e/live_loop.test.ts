// Live round trip against a locally served sim: requires the python
// package on PATH (pip install -e ..) and node's WebSocket global
// (run via `npm run e2e`, which passes --experimental-websocket).

import assert from "node:assert/strict";
import { spawn } from "node:child_process";
import { after, before, test } from "node:test";

import { joystickToCommand } from "../src/joystick_map.js";
import { Telemetry, decodeServerFrame, encodeCommand } from "../src/protocol.js";
import { initialState, inputSuppressed, onOpen, onTelemetry } from "../src/state.js";

const PORT = 8973;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ReturnType<typeof spawn>;

async function waitHealthy(timeoutMs = 15000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        try {
            const resp = await fetch(`${BASE}/healthz`);
            if (resp.ok) return;
        } catch {
            // not up yet
        }
        await new Promise((r) => setTimeout(r, 200));
    }
    throw new Error("teleop server never became healthy");
}

function openSocket(): Promise<WebSocket> {
    return new Promise((resolve, reject) => {
        const ws = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
        ws.onopen = () => resolve(ws);
        ws.onerror = (e) => reject(e);
    });
}

function collectTelemetry(ws: WebSocket, sink: (f: Telemetry) => void): void {
    ws.onmessage = (ev: MessageEvent) => {
        const frame = decodeServerFrame(String(ev.data));
        if (frame.type === "telemetry") sink(frame);
    };
}

before(async () => {
    server = spawn("emrs", ["serve", "--port", String(PORT), "--scenario", "spot_outdoor"],
                   { stdio: "ignore" });
    await waitHealthy();
});

after(() => {
    server.kill();
});

test("joystick input produces a telemetry-visible pose change within 200 ms", async () => {
    const ws = await openSocket();
    const frames: Telemetry[] = [];
    collectTelemetry(ws, (f) => frames.push(f));
    while (frames.length === 0) await new Promise((r) => setTimeout(r, 20));
    const x0 = frames[frames.length - 1].true_pose[0];

    const cmd = joystickToCommand({ x: 0, y: 1 }, "ackermann");
    const t0 = Date.now();
    let movedAt: number | null = null;
    while (Date.now() - t0 < 2000) {
        ws.send(encodeCommand(cmd));
        await new Promise((r) => setTimeout(r, 40));
        const latest = frames[frames.length - 1];
        if (latest && latest.true_pose[0] - x0 > 5e-5) {
            movedAt = Date.now() - t0;
            break;
        }
    }
    ws.close();
    assert.notEqual(movedAt, null, "rover never moved");
    assert.ok(movedAt! <= 200, `pose change took ${movedAt} ms`);
});

test("deadzone sends an exact zero command", async () => {
    const ws = await openSocket();
    const frames: Telemetry[] = [];
    collectTelemetry(ws, (f) => frames.push(f));
    const cmd = joystickToCommand({ x: 0.05, y: -0.03 }, "ackermann");
    assert.equal(cmd.v, 0);
    assert.equal(cmd.omega, 0);
    ws.send(encodeCommand(cmd));
    await new Promise((r) => setTimeout(r, 300));
    const latest = frames[frames.length - 1];
    assert.deepEqual(latest.cmd_twist, [0, 0, 0]);
    ws.close();
});

test("fault telemetry suppresses console input", async () => {
    const ws = await openSocket();
    const st = initialState();
    onOpen(st);
    collectTelemetry(ws, (f) => onTelemetry(st, f, Date.now()));
    ws.send(encodeCommand({ type: "estop" }));
    const deadline = Date.now() + 3000;
    while (Date.now() < deadline && st.latest?.phase !== "fault") {
        await new Promise((r) => setTimeout(r, 40));
    }
    assert.equal(st.latest?.phase, "fault");
    assert.equal(inputSuppressed(st, Date.now()), true);
    ws.send(encodeCommand({ type: "reset" }));
    while (Date.now() < deadline && st.latest?.phase === "fault") {
        await new Promise((r) => setTimeout(r, 40));
    }
    assert.equal(st.latest?.phase, "idle");
    ws.close();
});
