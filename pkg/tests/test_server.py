import asyncio
import json
import math

import pytest
from aiohttp.test_utils import TestClient, TestServer

from emrs.scenario import packaged_path
from emrs.server import TeleopServer


def run_session(coro_factory):
    """Spin up the service, run the async scenario against it, tear down."""

    async def main():
        server = TeleopServer(packaged_path("spot_outdoor"), seed=7)
        app = server.build_app()
        client = TestClient(TestServer(app))
        await client.start_server()
        try:
            return await asyncio.wait_for(coro_factory(server, client), timeout=30)
        finally:
            await client.close()

    return asyncio.run(main())


async def next_of_type(ws, kind, timeout=5.0):
    loop = asyncio.get_running_loop()
    deadline = loop.time() + timeout
    while True:
        remaining = deadline - loop.time()
        if remaining <= 0:
            raise TimeoutError(f"no '{kind}' frame within {timeout} s")
        try:
            msg = await asyncio.wait_for(ws.receive(), timeout=remaining)
        except asyncio.TimeoutError:
            raise TimeoutError(f"no '{kind}' frame within {timeout} s")
        data = json.loads(msg.data)
        if data["type"] == kind:
            return data


class TestHealth:
    def test_healthz_reports_scenario(self):
        async def scenario(server, client):
            resp = await client.get("/healthz")
            assert resp.status == 200
            body = await resp.json()
            assert body["status"] == "ok"
            assert body["scenario"] == "spot_outdoor"
            return True

        assert run_session(scenario)

    def test_index_serves_placeholder_without_console(self):
        async def scenario(server, client):
            resp = await client.get("/")
            assert resp.status == 200
            text = await resp.text()
            assert "teleop" in text
            return True

        assert run_session(scenario)


class TestCommandFlow:
    def test_speed_command_moves_rover_in_telemetry(self):
        async def scenario(server, client):
            ws = await client.ws_connect("/ws")
            first = await next_of_type(ws, "telemetry")
            x0 = first["true_pose"][0]
            await ws.send_str('{"type":"speed","mode":"ackermann","v":0.1,"omega":0}')
            ack = await next_of_type(ws, "ack")
            assert ack["applied"] == "speed"
            # keep the deadman fed while we wait for visible motion
            moved = None
            for _ in range(40):
                frame = await next_of_type(ws, "telemetry")
                await ws.send_str(
                    '{"type":"speed","mode":"ackermann","v":0.1,"omega":0}')
                if frame["true_pose"][0] - x0 > 0.002:
                    moved = frame
                    break
            assert moved is not None
            assert moved["phase"] == "driving"
            return True

        assert run_session(scenario)

    def test_malformed_keeps_connection_open(self):
        async def scenario(server, client):
            ws = await client.ws_connect("/ws")
            await ws.send_str('{"type":"set_tilt","angle_deg":35}')
            err = await next_of_type(ws, "error")
            assert err["code"] == "malformed"
            # connection still works
            await ws.send_str('{"type":"estop"}')
            ack = await next_of_type(ws, "ack")
            assert ack["applied"] == "estop"
            return True

        assert run_session(scenario)

    def test_fault_blocks_speed_commands(self):
        async def scenario(server, client):
            ws = await client.ws_connect("/ws")
            await ws.send_str('{"type":"estop"}')
            await next_of_type(ws, "ack")
            await ws.send_str('{"type":"speed","mode":"ackermann","v":0.1,"omega":0}')
            await next_of_type(ws, "ack")  # accepted transport-wise, rejected by manager
            frame = await next_of_type(ws, "telemetry")
            assert frame["phase"] == "fault"
            assert frame["fault_reason"] == "estop"
            assert frame["speed_sp_radps"] == [0.0, 0.0, 0.0, 0.0]
            # manager state must not have been driven by the speed command
            assert server.manager.phase.value == "fault"
            await ws.send_str('{"type":"reset"}')
            await next_of_type(ws, "ack")
            frame = await next_of_type(ws, "telemetry")
            assert frame["phase"] == "idle"
            return True

        assert run_session(scenario)

    def test_deadman_injects_zero_speed_once(self):
        async def scenario(server, client):
            ws = await client.ws_connect("/ws")
            await ws.send_str('{"type":"speed","mode":"ackermann","v":0.1,"omega":0}')
            await next_of_type(ws, "ack")
            err = await next_of_type(ws, "error", timeout=5.0)
            assert err["code"] == "command_timeout"
            frame = await next_of_type(ws, "telemetry")
            assert frame["cmd_twist"] == [0.0, 0.0, 0.0]
            # only one injection per silence episode
            with pytest.raises(TimeoutError):
                await next_of_type(ws, "error", timeout=1.5)
            return True

        assert run_session(scenario)

    def test_set_tilt_applies_to_tilt_bed_scenario(self):
        async def scenario(server, client):
            ws = await client.ws_connect("/ws")
            await ws.send_str('{"type":"load_scenario","name":"pel_indoor"}')
            ack = await next_of_type(ws, "ack")
            assert ack["applied"] == "load_scenario:pel_indoor"
            await ws.send_str('{"type":"set_tilt","angle_deg":25}')
            ack = await next_of_type(ws, "ack")
            assert ack["applied"] == "set_tilt:25"
            assert server.world.terrain.tilt.angle_rad == pytest.approx(
                math.radians(25))
            return True

        assert run_session(scenario)


class TestCommandOrdering:
    def test_commands_processed_in_send_order(self):
        async def scenario(server, client):
            ws = await client.ws_connect("/ws")
            speeds = [round(0.01 * i, 3) for i in range(1, 11)]
            for v in speeds:
                await ws.send_str(json.dumps(
                    {"type": "speed", "mode": "ackermann", "v": v, "omega": 0}))
            # one ack per command, in send order
            acks = [await next_of_type(ws, "ack") for _ in speeds]
            assert [a["applied"] for a in acks] == ["speed"] * len(speeds)
            # last writer is authoritative after the burst
            assert server.active_speed.v_mps == pytest.approx(speeds[-1])
            return True

        assert run_session(scenario)


class TestTerrainInfo:
    def test_healthz_reports_terrain_layout(self):
        async def scenario(server, client):
            body = await (await client.get("/healthz")).json()
            t = body["terrain"]
            assert t["size_x_m"] == 15.0
            assert t["size_y_m"] == 12.0
            assert t["hinge_x_m"] is None
            assert t["obstacles"] == []
            return True

        assert run_session(scenario)


class TestMultiClient:
    def test_telemetry_fanout_and_last_writer_wins(self):
        async def scenario(server, client):
            ws1 = await client.ws_connect("/ws")
            ws2 = await client.ws_connect("/ws")
            await ws1.send_str('{"type":"speed","mode":"ackermann","v":0.05,"omega":0}')
            await next_of_type(ws1, "ack")
            await ws2.send_str('{"type":"speed","mode":"ackermann","v":0.1,"omega":0}')
            await next_of_type(ws2, "ack")
            f1 = await next_of_type(ws1, "telemetry")
            f2 = await next_of_type(ws2, "telemetry")
            assert f1["last_commander"] == "client-2"
            assert f2["last_commander"] == "client-2"
            # latest command is authoritative
            assert server.active_speed.v_mps == pytest.approx(0.1)
            return True

        assert run_session(scenario)


class TestLiveness:
    def test_telemetry_cadence(self):
        async def scenario(server, client):
            ws = await client.ws_connect("/ws")
            loop = asyncio.get_running_loop()
            sim_ts = []
            walls = []
            while len(sim_ts) < 24:
                frame = await next_of_type(ws, "telemetry")
                sim_ts.append(frame["t_s"])
                walls.append(loop.time())
            gaps = [round(b - a, 9) for a, b in zip(sim_ts, sim_ts[1:])]
            assert all(g == pytest.approx(0.05, abs=1e-9) for g in gaps)
            wall_gaps = [b - a for a, b in zip(walls, walls[1:])]
            assert sum(wall_gaps) / len(wall_gaps) < 0.075
            return True

        assert run_session(scenario)
