// Wire schema of the teleoperation service: line-delimited JSON text
// frames over one WebSocket. This module mirrors the server exactly and
// is the only place the schema appears on the console side.

export type Mode = "ackermann" | "point_turn" | "crab" | "skid";

export const MODES: Mode[] = ["ackermann", "point_turn", "crab", "skid"];

export interface SpeedCommand {
    type: "speed";
    mode: Mode;
    v?: number;       // m/s, absent for point_turn
    omega?: number;   // rad/s, absent for crab
    heading?: number; // rad, crab only
}

export interface ChangeModeCommand { type: "change_mode"; mode: Mode; }
export interface EStopCommand { type: "estop"; }
export interface ResetCommand { type: "reset"; }
export interface LoadScenarioCommand { type: "load_scenario"; name: string; }
export interface SetTiltCommand { type: "set_tilt"; angle_deg: number; }

export type Command =
    | SpeedCommand
    | ChangeModeCommand
    | EStopCommand
    | ResetCommand
    | LoadScenarioCommand
    | SetTiltCommand;

export interface Telemetry {
    type: "telemetry";
    t_s: number;
    phase: "idle" | "driving" | "reconfiguring" | "fault";
    mode: Mode;
    fault_reason: string | null;
    cmd_twist: [number, number, number];
    act_twist: [number, number, number];
    steer_sp_rad: number[];
    steer_rad: number[];
    speed_sp_radps: number[];
    speed_radps: number[];
    drive_current_a: number[];
    drive_temp_c: number[];
    steer_current_a: number[];
    steer_temp_c: number[];
    slip: number[];
    true_pose: [number, number, number, number, number];
    tracked_pose: [number, number, number];
    tracked_valid: boolean;
    last_command_time: number;
    last_commander: string;
}

export interface ErrorFrame { type: "error"; code: string; detail: string; }
export interface AckFrame { type: "ack"; applied: string; }

export type ServerFrame = Telemetry | ErrorFrame | AckFrame;

export function encodeCommand(cmd: Command): string {
    return JSON.stringify(cmd);
}

function isNumArray(v: unknown, n: number): v is number[] {
    return Array.isArray(v) && v.length === n && v.every((x) => typeof x === "number");
}

// Strict decode; throws on anything that does not match the schema.
export function decodeServerFrame(text: string): ServerFrame {
    const obj = JSON.parse(text);
    if (typeof obj !== "object" || obj === null) throw new Error("frame must be an object");
    switch (obj.type) {
        case "error":
            if (typeof obj.code !== "string" || typeof obj.detail !== "string")
                throw new Error("malformed error frame");
            return obj as ErrorFrame;
        case "ack":
            if (typeof obj.applied !== "string") throw new Error("malformed ack frame");
            return obj as AckFrame;
        case "telemetry":
            return decodeTelemetry(obj);
        default:
            throw new Error(`unknown frame type '${obj.type}'`);
    }
}

export function decodeTelemetry(obj: any): Telemetry {
    const quads = [
        "steer_sp_rad", "steer_rad", "speed_sp_radps", "speed_radps",
        "drive_current_a", "drive_temp_c", "steer_current_a", "steer_temp_c",
        "slip",
    ];
    if (typeof obj.t_s !== "number") throw new Error("t_s missing");
    if (!["idle", "driving", "reconfiguring", "fault"].includes(obj.phase))
        throw new Error(`bad phase '${obj.phase}'`);
    if (!MODES.includes(obj.mode)) throw new Error(`bad mode '${obj.mode}'`);
    if (obj.fault_reason !== null && typeof obj.fault_reason !== "string")
        throw new Error("bad fault_reason");
    if (!isNumArray(obj.cmd_twist, 3) || !isNumArray(obj.act_twist, 3))
        throw new Error("bad twist");
    for (const key of quads) {
        if (!isNumArray(obj[key], 4)) throw new Error(`bad ${key}`);
    }
    if (!isNumArray(obj.true_pose, 5)) throw new Error("bad true_pose");
    if (!isNumArray(obj.tracked_pose, 3)) throw new Error("bad tracked_pose");
    if (typeof obj.tracked_valid !== "boolean") throw new Error("bad tracked_valid");
    if (typeof obj.last_command_time !== "number") throw new Error("bad last_command_time");
    if (typeof obj.last_commander !== "string") throw new Error("bad last_commander");
    return obj as Telemetry;
}

// Serialisation mirror of the server's field order; used by the round-trip
// fuzz so both sides agree on the exact wire shape.
export function encodeTelemetry(f: Telemetry): string {
    const sig9 = (x: number) => Number(x.toPrecision(9));
    return JSON.stringify({
        type: "telemetry",
        t_s: sig9(f.t_s),
        phase: f.phase,
        mode: f.mode,
        fault_reason: f.fault_reason,
        cmd_twist: f.cmd_twist.map(sig9),
        act_twist: f.act_twist.map(sig9),
        steer_sp_rad: f.steer_sp_rad.map(sig9),
        steer_rad: f.steer_rad.map(sig9),
        speed_sp_radps: f.speed_sp_radps.map(sig9),
        speed_radps: f.speed_radps.map(sig9),
        drive_current_a: f.drive_current_a.map(sig9),
        drive_temp_c: f.drive_temp_c.map(sig9),
        steer_current_a: f.steer_current_a.map(sig9),
        steer_temp_c: f.steer_temp_c.map(sig9),
        slip: f.slip.map(sig9),
        true_pose: f.true_pose.map(sig9),
        tracked_pose: f.tracked_pose.map(sig9),
        tracked_valid: f.tracked_valid,
        last_command_time: sig9(f.last_command_time),
        last_commander: f.last_commander,
    });
}
