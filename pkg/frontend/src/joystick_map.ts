// Stick-to-command mapping. One JoystickSample path feeds every input
// source (pointer joystick, keyboard, gamepad), so the deadzone and limit
// behaviour is identical for all of them.

import { Mode, SpeedCommand } from "./protocol.js";

export interface JoystickSample {
    x: number; // right positive
    y: number; // up positive
}

export interface Limits {
    vMax: number;     // m/s
    omegaMax: number; // rad/s
}

export const DEFAULT_LIMITS: Limits = { vMax: 0.2, omegaMax: 0.3 };
export const DEADZONE = 0.08;

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));
const noNegZero = (v: number) => (v === 0 ? 0 : v);

export function clampSample(s: JoystickSample): JoystickSample {
    return { x: clamp(s.x, -1, 1), y: clamp(s.y, -1, 1) };
}

export function inDeadzone(s: JoystickSample): boolean {
    return Math.hypot(s.x, s.y) < DEADZONE;
}

// Inside the deadzone every mode gets an exact-zero command (not a small
// one), so a resting stick can never creep the rover.
export function joystickToCommand(
    sample: JoystickSample,
    mode: Mode,
    limits: Limits = DEFAULT_LIMITS,
): SpeedCommand {
    const s = clampSample(sample);
    const dead = inDeadzone(s);
    switch (mode) {
        case "ackermann":
        case "skid":
            return {
                type: "speed",
                mode,
                v: dead ? 0 : noNegZero(s.y * limits.vMax),
                omega: dead ? 0 : noNegZero(-s.x * limits.omegaMax),
            };
        case "point_turn":
            return { type: "speed", mode,
                     omega: dead ? 0 : noNegZero(-s.x * limits.omegaMax) };
        case "crab": {
            if (dead) return { type: "speed", mode, v: 0, heading: 0 };
            const mag = Math.min(1, Math.hypot(s.x, s.y));
            const heading = clamp(Math.atan2(s.x, s.y), -Math.PI / 2, Math.PI / 2);
            return { type: "speed", mode, v: mag * limits.vMax, heading };
        }
    }
}

// Keyboard fallback: WASD drives the same sample path; Q/E are turn
// aliases on the x axis.
export interface KeyState {
    w: boolean; a: boolean; s: boolean; d: boolean; q: boolean; e: boolean;
}

export function keysToSample(k: KeyState): JoystickSample {
    const y = (k.w ? 1 : 0) - (k.s ? 1 : 0);
    const x = (k.d ? 1 : 0) - (k.a ? 1 : 0) + (k.e ? 1 : 0) - (k.q ? 1 : 0);
    return clampSample({ x, y });
}

// Keeps the command rate at or below the wire budget.
export class CommandThrottle {
    private lastSent = -Infinity;

    constructor(private minIntervalMs: number = 50) {}

    shouldSend(nowMs: number): boolean {
        if (nowMs - this.lastSent >= this.minIntervalMs) {
            this.lastSent = nowMs;
            return true;
        }
        return false;
    }
}
