// Top-down map and instrument rendering onto two canvases.

import { Telemetry } from "./protocol.js";
import { BannerLevel, ConsoleState, bannerFor } from "./state.js";

// footprint of the default rover geometry, body frame (metres)
const HALF_WB = 0.6;
const HALF_TRACK = 0.5;
const WHEEL_LEN = 0.3;
const PIVOTS: [number, number][] = [
    [HALF_WB, HALF_TRACK],
    [HALF_WB, -HALF_TRACK],
    [-HALF_WB, HALF_TRACK],
    [-HALF_WB, -HALF_TRACK],
];

export interface MapObstacle { polygon: [number, number][]; height_m: number; }

export interface MapExtent {
    sizeX: number;
    sizeY: number;
    hingeX: number | null;
    obstacles: MapObstacle[];
}

export const DEFAULT_EXTENT: MapExtent = { sizeX: 15, sizeY: 12, hingeX: null, obstacles: [] };
export const PEL_EXTENT: MapExtent = { sizeX: 10, sizeY: 5.5, hingeX: 6.5, obstacles: [] };

export function renderMap(
    canvas: HTMLCanvasElement,
    st: ConsoleState,
    extent: MapExtent,
    tiltDeg: number,
): void {
    const ctx = canvas.getContext("2d")!;
    const w = canvas.width;
    const h = canvas.height;
    ctx.fillStyle = "#191d24";
    ctx.fillRect(0, 0, w, h);

    const scale = Math.min(w / extent.sizeX, h / extent.sizeY) * 0.92;
    const ox = (w - extent.sizeX * scale) / 2;
    const oy = (h + extent.sizeY * scale) / 2;
    const X = (x: number) => ox + x * scale;
    const Y = (y: number) => oy - y * scale;

    // bed bounds and tilt section
    ctx.strokeStyle = "#4a5568";
    ctx.lineWidth = 2;
    ctx.strokeRect(X(0), Y(extent.sizeY), extent.sizeX * scale, extent.sizeY * scale);
    if (extent.hingeX !== null) {
        ctx.fillStyle = tiltDeg > 0 ? "rgba(214,158,46,0.25)" : "rgba(74,85,104,0.25)";
        ctx.fillRect(X(extent.hingeX), Y(extent.sizeY),
                     (extent.sizeX - extent.hingeX) * scale, extent.sizeY * scale);
        ctx.strokeStyle = "#d69e2e";
        ctx.setLineDash([6, 4]);
        ctx.beginPath();
        ctx.moveTo(X(extent.hingeX), Y(0));
        ctx.lineTo(X(extent.hingeX), Y(extent.sizeY));
        ctx.stroke();
        ctx.setLineDash([]);
        if (tiltDeg > 0) {
            ctx.fillStyle = "#d69e2e";
            ctx.font = "12px sans-serif";
            ctx.fillText(`tilt ${tiltDeg.toFixed(0)} deg`, X(extent.hingeX) + 6, Y(extent.sizeY) + 16);
        }
    }

    // obstacles
    for (const ob of extent.obstacles) {
        ctx.fillStyle = "rgba(197,48,48,0.35)";
        ctx.strokeStyle = "#c53030";
        ctx.beginPath();
        ctx.moveTo(X(ob.polygon[0][0]), Y(ob.polygon[0][1]));
        for (const [px, py] of ob.polygon.slice(1)) ctx.lineTo(X(px), Y(py));
        ctx.closePath();
        ctx.fill();
        ctx.stroke();
    }

    // pose trail
    if (st.trail.length > 1) {
        ctx.strokeStyle = "#63b3ed";
        ctx.lineWidth = 1.5;
        ctx.beginPath();
        ctx.moveTo(X(st.trail[0].x), Y(st.trail[0].y));
        for (const p of st.trail) ctx.lineTo(X(p.x), Y(p.y));
        ctx.stroke();
    }

    const f = st.latest;
    if (f === null) return;
    const [rx, ry, yaw] = f.true_pose;

    // rover footprint with per-wheel steering vectors
    ctx.save();
    ctx.translate(X(rx), Y(ry));
    ctx.rotate(-yaw);
    ctx.strokeStyle = f.phase === "fault" ? "#fc8181" : "#a0aec0";
    ctx.lineWidth = 2;
    ctx.strokeRect(-HALF_WB * scale, -HALF_TRACK * scale,
                   2 * HALF_WB * scale, 2 * HALF_TRACK * scale);
    ctx.beginPath();  // nose marker
    ctx.moveTo(HALF_WB * scale, 0);
    ctx.lineTo((HALF_WB + 0.2) * scale, 0);
    ctx.stroke();
    for (let i = 0; i < 4; i++) {
        const [px, py] = PIVOTS[i];
        const beta = f.steer_rad[i];
        const spinning = Math.abs(f.speed_radps[i]) > 1e-3;
        ctx.strokeStyle = spinning ? "#68d391" : "#718096";
        ctx.lineWidth = 3;
        ctx.beginPath();
        ctx.moveTo((px - (WHEEL_LEN / 2) * Math.cos(beta)) * scale,
                   -(py - (WHEEL_LEN / 2) * Math.sin(beta)) * scale);
        ctx.lineTo((px + (WHEEL_LEN / 2) * Math.cos(beta)) * scale,
                   -(py + (WHEEL_LEN / 2) * Math.sin(beta)) * scale);
        ctx.stroke();
    }
    ctx.restore();

    // tracked pose marker
    ctx.fillStyle = "rgba(246,173,85,0.9)";
    ctx.beginPath();
    ctx.arc(X(f.tracked_pose[0]), Y(f.tracked_pose[1]), 3, 0, 2 * Math.PI);
    ctx.fill();
}

const BANNER_COLORS: Record<BannerLevel, string> = {
    ok: "#2f855a",
    warn: "#b7791f",
    alert: "#c53030",
};

export function renderBanner(el: HTMLElement, st: ConsoleState, nowMs: number): void {
    const b = bannerFor(st, nowMs);
    el.textContent = b.text;
    el.style.background = BANNER_COLORS[b.level];
}

export function renderDials(tbody: HTMLElement, f: Telemetry | null): void {
    if (f === null) return;
    const rows = ["FL", "FR", "RL", "RR"].map((name, i) => {
        const deg = (f.steer_rad[i] * 180 / Math.PI).toFixed(1);
        return `<tr><td>${name}</td>` +
            `<td>${deg}°</td>` +
            `<td>${f.speed_radps[i].toFixed(2)}</td>` +
            `<td>${f.drive_current_a[i].toFixed(1)}</td>` +
            `<td>${f.drive_temp_c[i].toFixed(0)}°C</td>` +
            `<td>${(f.slip[i] * 100).toFixed(0)}%</td></tr>`;
    });
    tbody.innerHTML = rows.join("");
}
