// Pointer-driven virtual joystick; exposes a live JoystickSample.

import { JoystickSample } from "./joystick_map.js";

export class JoystickWidget {
    private knob: HTMLDivElement;
    private pointerId: number | null = null;
    private centerX = 0;
    private centerY = 0;
    private radius = 70;
    sample: JoystickSample = { x: 0, y: 0 };

    constructor(private base: HTMLDivElement) {
        this.knob = base.querySelector(".knob") as HTMLDivElement;
        base.addEventListener("pointerdown", (e) => this.start(e));
        base.addEventListener("pointermove", (e) => this.move(e));
        base.addEventListener("pointerup", (e) => this.end(e));
        base.addEventListener("pointercancel", (e) => this.end(e));
    }

    private start(e: PointerEvent) {
        if (this.pointerId !== null) return;
        this.pointerId = e.pointerId;
        this.base.setPointerCapture(e.pointerId);
        const rect = this.base.getBoundingClientRect();
        this.centerX = rect.left + rect.width / 2;
        this.centerY = rect.top + rect.height / 2;
        this.radius = rect.width / 2;
        this.track(e);
    }

    private move(e: PointerEvent) {
        if (e.pointerId === this.pointerId) this.track(e);
    }

    private end(e: PointerEvent) {
        if (e.pointerId !== this.pointerId) return;
        this.pointerId = null;
        this.sample = { x: 0, y: 0 };
        this.knob.style.transform = "translate(-50%, -50%)";
    }

    private track(e: PointerEvent) {
        let dx = e.clientX - this.centerX;
        let dy = e.clientY - this.centerY;
        const dist = Math.hypot(dx, dy);
        if (dist > this.radius) {
            dx *= this.radius / dist;
            dy *= this.radius / dist;
        }
        // screen y grows downward; stick y is up-positive
        this.sample = { x: dx / this.radius, y: -dy / this.radius };
        this.knob.style.transform =
            `translate(calc(-50% + ${dx}px), calc(-50% + ${dy}px))`;
    }
}
