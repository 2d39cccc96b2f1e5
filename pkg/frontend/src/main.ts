// Console wiring: socket, inputs, render loop.

import { CommandThrottle, DEFAULT_LIMITS, KeyState, inDeadzone, joystickToCommand, keysToSample } from "./joystick_map.js";
import { JoystickWidget } from "./joystick_widget.js";
import { Mode, MODES, encodeCommand, decodeServerFrame } from "./protocol.js";
import { ConsoleState, initialState, inputSuppressed, onClose, onError, onOpen, onTelemetry } from "./state.js";
import { MapExtent, PEL_EXTENT, renderBanner, renderDials, renderMap } from "./render.js";

const $ = (id: string) => document.getElementById(id)!;

const state: ConsoleState = initialState();
let extent: MapExtent = PEL_EXTENT;

// the service reports the active terrain layout; keep the map in sync
async function syncTerrain() {
    try {
        const info = await (await fetch("/healthz")).json();
        const t = info.terrain;
        extent = {
            sizeX: t.size_x_m,
            sizeY: t.size_y_m,
            hingeX: t.hinge_x_m,
            obstacles: t.obstacles,
        };
        state.tiltDeg = t.tilt_angle_deg;
        const tilt = $("tilt") as HTMLInputElement;
        if (document.activeElement !== tilt) {
            tilt.value = String(Math.round(t.tilt_angle_deg));
            $("tilt-label").textContent = `${Math.round(t.tilt_angle_deg)} deg`;
        }
    } catch {
        // offline; the banner already says so
    }
}
let socket: WebSocket | null = null;
const throttle = new CommandThrottle(50); // <= 20 Hz
const keys: KeyState = { w: false, a: false, s: false, d: false, q: false, e: false };

function connect() {
    const proto = location.protocol === "https:" ? "wss:" : "ws:";
    socket = new WebSocket(`${proto}//${location.host}/ws`);
    socket.onopen = () => onOpen(state);
    socket.onclose = () => {
        onClose(state);
        setTimeout(connect, 1500);
    };
    socket.onmessage = (ev: MessageEvent) => {
        try {
            const frame = decodeServerFrame(ev.data as string);
            if (frame.type === "telemetry") onTelemetry(state, frame, performance.now());
            else if (frame.type === "error") onError(state, `${frame.code}: ${frame.detail}`);
        } catch (err) {
            onError(state, String(err));
        }
    };
}

function send(obj: object): boolean {
    if (socket === null || socket.readyState !== WebSocket.OPEN) return false;
    socket.send(JSON.stringify(obj));
    return true;
}

function sendCommandTick(widget: JoystickWidget) {
    const now = performance.now();
    if (inputSuppressed(state, now)) return;
    const keySample = keysToSample(keys);
    const sample = Math.hypot(widget.sample.x, widget.sample.y) >
        Math.hypot(keySample.x, keySample.y) ? widget.sample : keySample;
    // a resting stick still heartbeats zero-speed so the deadman stays fed
    if (!throttle.shouldSend(now)) return;
    const mode: Mode = state.selectedMode;
    const cmd = joystickToCommand(sample, mode, DEFAULT_LIMITS);
    if (inDeadzone(sample) && state.latest !== null && state.latest.phase !== "driving") {
        return; // do not wake an idle rover with zero commands
    }
    send(cmd);
}

function setupModeButtons() {
    const box = $("modes");
    for (const mode of MODES) {
        const btn = document.createElement("button");
        btn.textContent = mode.replace("_", " ");
        btn.id = `mode-${mode}`;
        btn.onclick = () => send({ type: "change_mode", mode });
        box.appendChild(btn);
    }
}

function highlightMode() {
    for (const mode of MODES) {
        const btn = $(`mode-${mode}`);
        btn.classList.toggle("active", state.selectedMode === mode);
    }
}

function setupKeys() {
    const track = (ev: KeyboardEvent, down: boolean) => {
        const k = ev.key.toLowerCase();
        if (k in keys) {
            (keys as any)[k] = down;
            ev.preventDefault();
        }
    };
    document.addEventListener("keydown", (ev) => track(ev, true));
    document.addEventListener("keyup", (ev) => track(ev, false));
}

function main() {
    setupModeButtons();
    setupKeys();
    const widget = new JoystickWidget($("joystick") as HTMLDivElement);

    $("estop").onclick = () => send({ type: "estop" });
    $("reset").onclick = () => send({ type: "reset" });
    const tilt = $("tilt") as HTMLInputElement;
    const tiltLabel = $("tilt-label");
    tilt.oninput = () => {
        tiltLabel.textContent = `${tilt.value} deg`;
    };
    tilt.onchange = () => {
        state.tiltDeg = Number(tilt.value);
        send({ type: "set_tilt", angle_deg: state.tiltDeg });
    };
    const loadScenario = (name: string) => {
        state.trail.length = 0;
        send({ type: "load_scenario", name });
        setTimeout(syncTerrain, 300);
    };
    $("scenario-pel").onclick = () => loadScenario("pel_indoor");
    $("scenario-spot").onclick = () => loadScenario("spot_outdoor");

    connect();
    syncTerrain();
    setInterval(syncTerrain, 2000);
    setInterval(() => sendCommandTick(widget), 50);

    const canvas = $("map") as HTMLCanvasElement;
    const banner = $("banner");
    const dials = $("dials-body");
    const tick = () => {
        renderMap(canvas, state, extent, state.tiltDeg);
        renderBanner(banner, state, performance.now());
        renderDials(dials, state.latest);
        highlightMode();
        requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
}

document.addEventListener("DOMContentLoaded", main);
