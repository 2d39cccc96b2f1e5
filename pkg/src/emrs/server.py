"""Teleoperation service: one WebSocket channel for commands and telemetry,
static hosting for the browser console, and a health endpoint.

All commands funnel into the manager's single ordered queue (the asyncio
event loop); the sim task is the sole world mutator and broadcasts
immutable telemetry snapshots to every connected client at 20 Hz.  The
watchdog injects a zero-speed command once per silence episode when no
client has commanded for longer than the deadman timeout while the rover
is driving.
"""

from __future__ import annotations

import asyncio
import json
import math
from pathlib import Path

from aiohttp import WSMsgType, web

from . import __version__
from .errors import EmrsError, MalformedMessage
from .manager import ChangeMode, EStop, HealthSupervisor, LocomotionManager, Phase, Reset, Speed
from .protocol import (
    LoadScenario,
    SetTilt,
    decode_command,
    encode_ack,
    encode_error,
    encode_telemetry,
)
from .scenario import Scenario, load_scenario, packaged_path, resolve_ref
from .sim import ManagerOutput, Simulator
from .types import BodyTwist, zero_command
from .harness import _cmd_twist

CONTROL_DT = 0.01
TELEMETRY_EVERY = 5  # 20 Hz at the 100 Hz control rate
DEADMAN_S = 0.5


class TeleopServer:
    """Owns the world, the manager and the client sessions."""

    def __init__(self, scenario_path: str | Path, seed: int | None = None,
                 console_dir: str | Path | None = None, realtime: bool = True):
        self.scenario_path = Path(scenario_path)
        self.seed = seed
        self.realtime = realtime
        self.console_dir = Path(console_dir) if console_dir else None
        self.clients: dict[web.WebSocketResponse, str] = {}
        self._client_counter = 0
        self._last_commander = ""
        self._deadman_notified = False
        self._sim_task: asyncio.Task | None = None
        self._tick_index = 0
        self._load(self.scenario_path)

    # -- world lifecycle ----------------------------------------------------

    def _load(self, path: Path):
        self.scenario = load_scenario(path)
        seed = self.scenario.seed if self.seed is None else self.seed
        self.world = self.scenario.build_world(seed=seed)
        self.sim = Simulator(self.world)
        self.manager = LocomotionManager(self.scenario.geometry, self.scenario.manager_config)
        self.supervisor = HealthSupervisor(self.scenario.safety)
        self.active_speed = None
        self._tick_index = 0

    def now(self) -> float:
        return self.world.time_s

    # -- command handling ---------------------------------------------------

    def apply_command(self, cmd, client_id: str) -> str:
        """Apply one decoded client command; returns a short ack label."""
        now = self.now()
        self._last_commander = client_id
        if isinstance(cmd, LoadScenario):
            path = packaged_path(cmd.name)
            if not path.exists():
                raise MalformedMessage(f"no packaged scenario named '{cmd.name}'")
            self._load(path)
            return f"load_scenario:{cmd.name}"
        if isinstance(cmd, SetTilt):
            if self.world.terrain.tilt is None:
                raise MalformedMessage("active scenario has no tilt bed")
            self.world.terrain.tilt.set_angle(math.radians(cmd.angle_deg))
            return f"set_tilt:{cmd.angle_deg:g}"
        if isinstance(cmd, Speed):
            self.manager.handle_command(cmd, now)
            self.active_speed = cmd.body
            self._deadman_notified = False
            return "speed"
        if isinstance(cmd, (ChangeMode, EStop, Reset)):
            self.manager.handle_command(cmd, now)
            if isinstance(cmd, ChangeMode):
                self.active_speed = None
                return f"change_mode:{cmd.mode.value}"
            self.active_speed = None
            return type(cmd).__name__.lower()
        raise MalformedMessage("unsupported command")

    def session_tick(self) -> list[str]:
        """Deadman watchdog; returns advisory frames to broadcast."""
        advisories = []
        now = self.now()
        silence = now - self.manager.last_command_time
        if (
            silence > DEADMAN_S
            and self.manager.phase is Phase.DRIVING
            and not self._deadman_notified
        ):
            self.manager.handle_command(Speed(zero_command(self.manager.mode)), now)
            self.active_speed = None
            self._deadman_notified = True
            advisories.append(encode_error("command_timeout",
                                           f"no command for {silence:.2f} s; speed zeroed"))
        return advisories

    # -- sim advance ----------------------------------------------------------

    def advance_control_tick(self) -> str | None:
        """One 10 ms control tick; returns a telemetry frame text at 20 Hz."""
        now = self.now()
        sp = self.manager.tick(now)
        st = self.manager.state()
        cmd_twist = (
            _cmd_twist(self.active_speed)
            if (self.active_speed is not None and st.phase is Phase.DRIVING)
            else BodyTwist(0.0, 0.0, 0.0)
        )
        out = ManagerOutput(
            sp.steering_rad, sp.speed_radps, self.manager.mode, cmd_twist,
            st.phase is Phase.DRIVING,
        )
        for _ in range(self.sim.config.control_every):
            self.sim.step(out)
        self._tick_index += 1
        if self._tick_index % TELEMETRY_EVERY == 0:
            tracked = self.sim.maybe_track()
            frame = self.world.telemetry_frame(
                st.phase, self.manager.mode, st.fault_reason, out, tracked,
                self.manager.last_command_time, self._last_commander,
            )
            verdict = self.supervisor.check(frame, now)
            if not verdict.healthy and self.manager.phase is not Phase.FAULT:
                self.manager.force_fault(verdict.reason, now)
            return encode_telemetry(frame)
        return None

    async def _sim_loop(self):
        loop = asyncio.get_running_loop()
        next_wall = loop.time()
        while True:
            for text in self.session_tick():
                await self._broadcast(text)
            frame_text = self.advance_control_tick()
            if frame_text is not None:
                await self._broadcast(frame_text)
            next_wall += CONTROL_DT
            if self.realtime:
                delay = next_wall - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_wall = loop.time()
            else:
                await asyncio.sleep(0)

    async def _broadcast(self, text: str):
        dead = []
        for ws in list(self.clients):
            try:
                await ws.send_str(text)
            except (ConnectionError, RuntimeError):
                dead.append(ws)
        for ws in dead:
            self.clients.pop(ws, None)

    # -- aiohttp wiring -------------------------------------------------------

    async def handle_ws(self, request: web.Request) -> web.WebSocketResponse:
        ws = web.WebSocketResponse(heartbeat=20.0)
        await ws.prepare(request)
        self._client_counter += 1
        client_id = f"client-{self._client_counter}"
        self.clients[ws] = client_id
        try:
            async for msg in ws:
                if msg.type is not WSMsgType.TEXT:
                    continue
                try:
                    cmd = decode_command(msg.data)
                    applied = self.apply_command(cmd, client_id)
                    await ws.send_str(encode_ack(applied))
                except MalformedMessage as exc:
                    await ws.send_str(encode_error("malformed", str(exc)))
                except EmrsError as exc:
                    await ws.send_str(encode_error("rejected", str(exc)))
        finally:
            self.clients.pop(ws, None)
        return ws

    async def handle_healthz(self, request: web.Request) -> web.Response:
        terrain = self.world.terrain
        return web.json_response(
            {
                "status": "ok",
                "version": __version__,
                "scenario": self.scenario.name,
                "sim_time_s": round(self.world.time_s, 3),
                "clients": len(self.clients),
                "terrain": {
                    "size_x_m": terrain.size_x_m,
                    "size_y_m": terrain.size_y_m,
                    "hinge_x_m": terrain.tilt.hinge_x_m if terrain.tilt else None,
                    "tilt_angle_deg": math.degrees(terrain.tilt.angle_rad)
                    if terrain.tilt else 0.0,
                    "obstacles": [
                        {"polygon": [list(p) for p in ob.polygon],
                         "height_m": ob.height_m}
                        for ob in terrain.obstacles
                    ],
                },
            }
        )

    async def handle_index(self, request: web.Request) -> web.Response:
        if self.console_dir is not None:
            index = self.console_dir / "index.html"
            if index.exists():
                return web.FileResponse(index)
        return web.Response(
            text="<html><body><h1>rover teleop service</h1>"
            "<p>No console bundle found. Build the frontend and pass"
            " --console-dir, or connect to /ws directly.</p></body></html>",
            content_type="text/html",
        )

    def build_app(self) -> web.Application:
        app = web.Application()
        app.router.add_get("/ws", self.handle_ws)
        app.router.add_get("/healthz", self.handle_healthz)
        app.router.add_get("/", self.handle_index)
        if self.console_dir is not None and self.console_dir.exists():
            app.router.add_static("/", self.console_dir)
        app.on_startup.append(self._on_startup)
        app.on_cleanup.append(self._on_cleanup)
        return app

    async def _on_startup(self, app):
        self._sim_task = asyncio.create_task(self._sim_loop())

    async def _on_cleanup(self, app):
        if self._sim_task is not None:
            self._sim_task.cancel()
            try:
                await self._sim_task
            except asyncio.CancelledError:
                pass


def serve(scenario: str | Path, port: int, seed: int | None = None,
          console_dir: str | Path | None = None):
    """Run the teleoperation service until interrupted."""
    path = resolve_ref(str(scenario))
    server = TeleopServer(path, seed=seed, console_dir=console_dir)
    web.run_app(server.build_app(), port=port)
