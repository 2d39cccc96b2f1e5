// Console state and its pure update functions. The socket callbacks and
// the render loop share this object; nothing here touches the DOM.

import { Mode, Telemetry } from "./protocol.js";

export const TRAIL_CAPACITY = 2000;
export const TRAIL_PERIOD_S = 0.1;   // decimate the pose trail to 10 Hz
export const STALE_AFTER_MS = 1000;  // link considered dead after this

export type Connection = "connecting" | "connected" | "disconnected";

export interface TrailPoint { x: number; y: number; }

export interface ConsoleState {
    connection: Connection;
    selectedMode: Mode;
    latest: Telemetry | null;
    lastFrameWallMs: number;
    trail: TrailPoint[];
    lastTrailT: number;
    tiltDeg: number;
    lastError: string | null;
}

export function initialState(): ConsoleState {
    return {
        connection: "connecting",
        selectedMode: "ackermann",
        latest: null,
        lastFrameWallMs: -Infinity,
        trail: [],
        lastTrailT: -Infinity,
        tiltDeg: 0,
        lastError: null,
    };
}

export function onOpen(st: ConsoleState): void {
    st.connection = "connected";
    st.lastError = null;
}

export function onClose(st: ConsoleState): void {
    st.connection = "disconnected";
}

export function onTelemetry(st: ConsoleState, frame: Telemetry, nowMs: number): void {
    st.latest = frame;
    st.lastFrameWallMs = nowMs;
    st.selectedMode = frame.mode;
    if (frame.t_s - st.lastTrailT >= TRAIL_PERIOD_S) {
        st.trail.push({ x: frame.true_pose[0], y: frame.true_pose[1] });
        if (st.trail.length > TRAIL_CAPACITY) {
            st.trail.splice(0, st.trail.length - TRAIL_CAPACITY);
        }
        st.lastTrailT = frame.t_s;
    }
}

export function onError(st: ConsoleState, detail: string): void {
    st.lastError = detail;
}

// The link is stale when frames stop arriving even if no close event fired.
export function isStale(st: ConsoleState, nowMs: number): boolean {
    return st.connection !== "connected" || nowMs - st.lastFrameWallMs > STALE_AFTER_MS;
}

// No command may leave the console while faulted, disconnected or stale;
// the operator must see the condition and reset deliberately.
export function inputSuppressed(st: ConsoleState, nowMs: number): boolean {
    if (isStale(st, nowMs)) return true;
    return st.latest !== null && st.latest.phase === "fault";
}

export type BannerLevel = "ok" | "warn" | "alert";

export function bannerFor(st: ConsoleState, nowMs: number): { level: BannerLevel; text: string } {
    if (isStale(st, nowMs)) return { level: "alert", text: "DISCONNECTED" };
    const f = st.latest;
    if (f === null) return { level: "warn", text: "waiting for telemetry" };
    if (f.phase === "fault") return { level: "alert", text: `FAULT: ${f.fault_reason}` };
    const slip = Math.max(...f.slip);
    if (slip > 0.5) return { level: "warn", text: `high slip ${(slip * 100).toFixed(0)}%` };
    if (f.phase === "reconfiguring") return { level: "warn", text: "reconfiguring steering" };
    return { level: "ok", text: `${f.mode} / ${f.phase}` };
}
