import math
from dataclasses import replace

import numpy as np
import pytest

from emrs.errors import OutOfBounds, TipOver
from emrs.kinematics import forward_odometry, integrate_pose, inverse_kinematics
from emrs.manager import ChangeMode, LocomotionManager, Phase, Speed
from emrs.sim import (
    GRAVITY,
    ManagerOutput,
    Simulator,
    World,
    obstacle_check,
    slip_from_ratio,
    tracking_emulate,
    traction_step,
    wheel_loads,
)
from emrs.terrain import MAX_TILT_RAD, Obstacle, SoilParams, TerrainModel, TiltBed
from emrs.types import (
    AckermannCommand,
    BodyTwist,
    CrabCommand,
    LocomotionMode,
    PointTurnCommand,
    Pose2p5,
    RoverGeometry,
    SkidCommand,
    zero_command,
)

GEO = RoverGeometry(wheelbase_m=1.2, track_m=1.0, wheel_radius_m=0.15,
                    steering_offset_m=0.05)
COG_P = (0.0, 0.0, 0.55)


class TestTerrain:
    def test_flat_query(self):
        terr = TerrainModel.flat(10.0, 5.5)
        h, n, soil = terr.query(3.0, 2.0)
        assert h == 0.0
        assert n == pytest.approx((0.0, 0.0, 1.0))
        assert soil.cohesion_kpa == 10.0

    def test_bilinear_cell_centre_quarter(self):
        heights = [[0.0, 0.0], [0.0, 1.0]]
        terr = TerrainModel(heights, cell_m=1.0)
        assert terr.height_at(0.5, 0.5) == pytest.approx(0.25)

    def test_bilinear_continuity_across_cells(self):
        heights = [[0.0, 0.3, 0.1], [0.2, 0.5, 0.0], [0.0, 0.1, 0.4]]
        terr = TerrainModel(heights, cell_m=1.0)
        eps = 1e-9
        for x in (0.5, 1.0, 1.5):
            a = terr.height_at(x - eps, 1.0)
            b = terr.height_at(x + eps, 1.0)
            assert a == pytest.approx(b, abs=1e-6)

    def test_tilt_bed_surface_angle(self):
        terr = TerrainModel.flat(10.0, 5.5,
                                 tilt=TiltBed(hinge_x_m=6.5,
                                              angle_rad=math.radians(25)))
        n = terr.normal_at(8.0, 2.75)
        tilt = math.acos(n[2])
        assert tilt == pytest.approx(math.radians(25), abs=1e-3)
        # flat section unaffected
        assert terr.height_at(5.0, 2.0) == 0.0

    def test_tilt_bed_rejects_beyond_thirty_degrees(self):
        with pytest.raises(ValueError):
            TiltBed(hinge_x_m=6.5, angle_rad=math.radians(31))
        bed = TiltBed(hinge_x_m=6.5, angle_rad=0.0)
        with pytest.raises(ValueError):
            bed.set_angle(MAX_TILT_RAD + 0.01)

    def test_out_of_bounds(self):
        terr = TerrainModel.flat(10.0, 5.5)
        with pytest.raises(OutOfBounds):
            terr.height_at(11.0, 2.0)
        with pytest.raises(OutOfBounds):
            terr.query(3.0, -0.1)

    def test_obstacle_bump_smooth_and_contained(self):
        ob = Obstacle(polygon=((4.0, 1.0), (4.4, 1.0), (4.4, 4.0), (4.0, 4.0)),
                      height_m=0.15)
        terr = TerrainModel.flat(10.0, 5.5, obstacles=[ob])
        assert terr.height_at(4.2, 2.0) == pytest.approx(0.15)
        assert terr.height_at(4.45, 2.0) < 0.15
        assert terr.height_at(5.0, 2.0) == 0.0


class TestWheelLoads:
    def test_flat_centred_equal_quarter_weight(self):
        loads = wheel_loads(GEO, 0.0, 0.0, 0.0, COG_P, (0.0,) * 4)
        assert loads == pytest.approx((250 * GRAVITY / 4,) * 4)

    def test_payload_scales_total(self):
        loads = wheel_loads(GEO, 0.0, 0.0, 300.0, COG_P, (0.0,) * 4)
        assert loads == pytest.approx((550 * GRAVITY / 4,) * 4)

    def test_uphill_shifts_load_to_rear(self):
        loads = wheel_loads(GEO, math.radians(15), 0.0, 0.0, COG_P, (0.0,) * 4)
        assert loads[2] > loads[0]  # rear-left carries more than front-left
        assert loads[3] > loads[1]
        assert loads[0] > 0 and loads[1] > 0

    def test_against_independent_kkt_oracle(self):
        """Minimum-norm statics recomputed as the full KKT system with
        numpy, plus a direct equilibrium residual check."""
        pitch, roll, payload = math.radians(15), math.radians(5), 300.0
        steering = (0.2, -0.1, 0.05, 0.0)
        loads = wheel_loads(GEO, pitch, roll, payload, COG_P, steering)

        from emrs.kinematics import contact_point

        m = GEO.chassis_mass_kg + payload
        cx = (GEO.chassis_mass_kg * GEO.cog_body[0] + payload * COG_P[0]) / m
        cy = (GEO.chassis_mass_kg * GEO.cog_body[1] + payload * COG_P[1]) / m
        cz = (GEO.chassis_mass_kg * GEO.cog_body[2] + payload * COG_P[2]) / m
        g_bx = -GRAVITY * math.sin(pitch)
        g_by = -GRAVITY * math.sin(roll)
        g_bz = -GRAVITY * math.cos(pitch) * math.cos(roll)
        contacts = [contact_point(p, steering[i], GEO)
                    for i, p in enumerate(GEO.pivot_positions)]
        A = np.array([[1.0] * 4,
                      [c[0] for c in contacts],
                      [c[1] for c in contacts]])
        b = np.array([-m * g_bz,
                      m * (cz * g_bx - cx * g_bz),
                      m * (cz * g_by - cy * g_bz)])
        # KKT of min ||n||^2 s.t. A n = b
        kkt = np.zeros((7, 7))
        kkt[:4, :4] = 2 * np.eye(4)
        kkt[:4, 4:] = A.T
        kkt[4:, :4] = A
        rhs = np.concatenate([np.zeros(4), b])
        n_oracle = np.linalg.solve(kkt, rhs)[:4]
        assert loads == pytest.approx(tuple(n_oracle), rel=1e-9)
        # equilibrium residuals
        assert np.allclose(A @ np.array(loads), b, atol=1e-8)

    def test_load_conservation_across_attitudes(self):
        for pitch_deg in (0, 5, 12, 15):
            for roll_deg in (0, -8, 8):
                pitch, roll = math.radians(pitch_deg), math.radians(roll_deg)
                loads = wheel_loads(GEO, pitch, roll, 120.0, COG_P, (0.0,) * 4)
                total = 370.0 * GRAVITY * math.cos(pitch) * math.cos(roll)
                assert sum(loads) == pytest.approx(total, rel=1e-9)

    def test_static_stability_at_fifteen_degrees(self):
        for payload in (0.0, 300.0):
            for pitch, roll in ((math.radians(15), 0.0), (0.0, math.radians(15))):
                loads = wheel_loads(GEO, pitch, roll, payload, COG_P, (0.0,) * 4)
                assert min(loads) > 0.0

    def test_tipover_for_extreme_cog(self):
        geo = replace(GEO, cog_body=(0.0, 0.0, 2.5))
        with pytest.raises(TipOver):
            wheel_loads(geo, math.radians(15), 0.0, 0.0, COG_P, (0.0,) * 4)


class TestSlipLaw:
    def test_piecewise_values(self):
        assert slip_from_ratio(0.0, 0.5) == 0.0
        assert slip_from_ratio(0.5, 0.5) == 0.0
        assert slip_from_ratio(0.75, 0.5) == pytest.approx(0.5)
        assert slip_from_ratio(1.0, 0.5) == 1.0
        assert slip_from_ratio(5.0, 0.5) == 1.0

    def test_monotone_in_ratio(self):
        xs = [i / 100 for i in range(150)]
        ys = [slip_from_ratio(x, 0.5) for x in xs]
        assert all(b >= a for a, b in zip(ys, ys[1:]))


def make_world(tilt_deg=0.0, pose=None, payload=0.0, drag=0.0, yaw=0.0,
               soil=None, obstacles=()):
    terr = TerrainModel.flat(
        10.0, 5.5,
        soil=soil or SoilParams(),
        tilt=TiltBed(hinge_x_m=6.5, angle_rad=math.radians(tilt_deg)),
        obstacles=list(obstacles),
    )
    pose = pose or Pose2p5(7.6, 2.75, yaw)
    w = World(GEO, terr, pose, payload_kg=payload, blade_drag_n=drag)
    w.loads_n = list(wheel_loads(GEO, w.pose.pitch_rad, w.pose.roll_rad,
                                 payload, COG_P, (0.0,) * 4))
    return w


def spin_wheels(world, speeds):
    for i, s in enumerate(speeds):
        world.wheel_speed[i] = s


def drive_output(mode, cmd_twist, speeds, angles=(0.0,) * 4):
    return ManagerOutput(tuple(angles), tuple(speeds), mode, cmd_twist, True)


class TestTraction:
    def test_flat_cruise_no_slip(self):
        w = make_world(0.0, pose=Pose2p5(3.0, 2.75, 0.0))
        spin_wheels(w, [0.4] * 4)
        out = drive_output(LocomotionMode.ACKERMANN, BodyTwist(0.06, 0, 0), [0.4] * 4)
        twist, slips = traction_step(w, out, 0.01)
        assert slips == (0.0,) * 4
        assert twist.vx_mps == pytest.approx(0.06, abs=1e-9)

    def test_up_slope_25_mean_slip_below_limit(self):
        w = make_world(25.0)
        w._prev_cmd_speed = 0.07  # steady cruise, no accel spike
        spin_wheels(w, [0.467] * 4)
        out = drive_output(LocomotionMode.ACKERMANN, BodyTwist(0.07, 0, 0), [0.467] * 4)
        _, slips = traction_step(w, out, 0.01)
        assert sum(slips) / 4 < 0.2
        assert max(slips) > 0.0  # but the heavy pair does slip a little

    def test_slip_monotone_in_slope(self):
        means = []
        for ang in (0, 5, 10, 15, 20, 25):
            w = make_world(ang)
            w._prev_cmd_speed = 0.07
            spin_wheels(w, [0.467] * 4)
            out = drive_output(LocomotionMode.ACKERMANN, BodyTwist(0.07, 0, 0),
                               [0.467] * 4)
            _, slips = traction_step(w, out, 0.01)
            means.append(sum(slips) / 4)
        assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))

    def test_slip_monotone_in_blade_drag(self):
        means = []
        for drag in (0, 200, 600, 1200, 2000):
            w = make_world(0.0, pose=Pose2p5(3.0, 2.75, 0.0), drag=drag)
            w._prev_cmd_speed = 0.05
            spin_wheels(w, [0.333] * 4)
            out = drive_output(LocomotionMode.ACKERMANN, BodyTwist(0.05, 0, 0),
                               [0.333] * 4)
            _, slips = traction_step(w, out, 0.01)
            means.append(sum(slips) / 4)
        assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))
        assert means[-1] > 0.3  # heavy drag does bite

    def test_point_turn_efficiency_ladder(self):
        effs = {}
        pt = inverse_kinematics(LocomotionMode.POINT_TURN, PointTurnCommand(0.15), GEO)
        for ang in (5, 15, 20, 25):
            w = make_world(ang)
            spin_wheels(w, pt.speed_radps)
            for i, a in enumerate(pt.steering_rad):
                w.steer_angles[i] = a
            w.loads_n = list(wheel_loads(GEO, w.pose.pitch_rad, w.pose.roll_rad,
                                         0.0, COG_P, pt.steering_rad))
            out = ManagerOutput(pt.steering_rad, pt.speed_radps,
                                LocomotionMode.POINT_TURN,
                                BodyTwist(0, 0, 0.15), True)
            twist, slips = traction_step(w, out, 0.01)
            effs[ang] = twist.omega_radps / 0.15
        assert effs[5] >= 0.95
        assert effs[15] >= 0.9
        assert effs[20] < 0.8
        assert effs[25] < effs[20] < effs[15] <= effs[5]

    def test_immobilisation_is_slip_one_not_error(self):
        soil = SoilParams(cohesion_kpa=0.1, friction_angle_deg=5.0)
        w = make_world(25.0, soil=soil)
        w._prev_cmd_speed = 0.07
        spin_wheels(w, [0.467] * 4)
        out = drive_output(LocomotionMode.ACKERMANN, BodyTwist(0.07, 0, 0),
                           [0.467] * 4)
        twist, slips = traction_step(w, out, 0.01)
        assert slips == (1.0,) * 4
        assert twist.vx_mps == pytest.approx(0.0, abs=1e-9)


class TestObstacleRule:
    @pytest.mark.parametrize("h_frac", [0.0, 0.5, 1.0, 1.2])
    @pytest.mark.parametrize("margin", [0.8, 1.0, 1.5])
    def test_decision_table(self, h_frac, margin):
        r = 0.15
        want = (h_frac * r <= r) and (margin >= 1.0)
        assert obstacle_check(h_frac * r, r, margin) is want

    def test_rejects_negative_height(self):
        with pytest.raises(ValueError):
            obstacle_check(-0.01, 0.15, 1.5)


class TestTracking:
    def test_zero_sigma_equals_truth(self):
        rng = np.random.default_rng(1)
        pose = Pose2p5(1.0, 2.0, 0.3, 0.05, -0.02)
        m = tracking_emulate(pose, rng, 0.5, sigma_pos_m=0.0, sigma_ang_rad=0.0)
        assert (m.x_m, m.y_m, m.yaw_rad) == (1.0, 2.0, 0.3)

    def test_sample_sigma_matches_spec(self):
        rng = np.random.default_rng(7)
        pose = Pose2p5(0.0, 0.0, 0.0)
        xs, yaws = [], []
        for i in range(10000):
            m = tracking_emulate(pose, rng, i / 60.0)
            xs.append(m.x_m)
            yaws.append(m.yaw_rad)
        assert np.std(xs) == pytest.approx(1e-3, rel=0.05)
        assert np.std(yaws) == pytest.approx(math.radians(1.0), rel=0.05)

    def test_seeded_reproducibility(self):
        pose = Pose2p5(0.0, 0.0, 0.0)
        a = [tracking_emulate(pose, np.random.default_rng(42), 0.0)
             for _ in range(1)]
        b = [tracking_emulate(pose, np.random.default_rng(42), 0.0)
             for _ in range(1)]
        assert a == b


def run_sim(world, mode, cmd, sim_seconds, manager=None):
    sim = Simulator(world)
    mgr = manager or LocomotionManager(GEO)
    if mgr.mode is not mode:
        mgr.handle_command(ChangeMode(mode), 0.0)
    n = int(sim_seconds / 0.01)
    poses = []
    for k in range(n):
        now = k * 0.01
        if k % 5 == 0:
            mgr.handle_command(Speed(cmd), now)
        sp = mgr.tick(now)
        st = mgr.state()
        out = ManagerOutput(sp.steering_rad, sp.speed_radps, mgr.mode,
                            BodyTwist(getattr(cmd, "v_mps", 0.0), 0.0,
                                      getattr(cmd, "omega_radps", 0.0)),
                            st.phase is Phase.DRIVING)
        for _ in range(10):
            sim.step(out)
        poses.append(world.pose)
    return poses


class TestSimStep:
    def test_zero_commands_fixed_point(self):
        w = make_world(0.0, pose=Pose2p5(3.0, 2.75, 0.0))
        sim = Simulator(w)
        out = ManagerOutput((0.0,) * 4, (0.0,) * 4, LocomotionMode.ACKERMANN,
                            BodyTwist(0, 0, 0), False)
        for _ in range(2000):
            sim.step(out)
        assert w.pose.x_m == 3.0 and w.pose.y_m == 2.75
        assert all(abs(s) < 1e-12 for s in w.wheel_speed)
        assert all(t == pytest.approx(22.0, abs=0.01) for t in w.wheel_temp)

    def test_crab_distance_over_forty_seconds(self):
        terr = TerrainModel.flat(15.0, 12.0)
        w = World(GEO, terr, Pose2p5(3.0, 6.0, 0.0))
        poses = run_sim(w, LocomotionMode.CRAB, CrabCommand(0.025, 0.0), 40.0)
        dist = poses[-1].x_m - 3.0
        assert dist == pytest.approx(1.0, rel=0.01)

    def test_determinism_bitwise(self):
        def one():
            terr = TerrainModel.flat(15.0, 12.0)
            w = World(GEO, terr, Pose2p5(3.0, 6.0, 0.0), seed=99)
            poses = run_sim(w, LocomotionMode.ACKERMANN,
                            AckermannCommand(0.1, 0.05), 5.0)
            return [(p.x_m, p.y_m, p.yaw_rad) for p in poses], list(w.wheel_temp)

        a, ta = one()
        b, tb = one()
        assert a == b and ta == tb

    def test_no_slip_fidelity_all_modes(self):
        """With friction high and cohesion large, dead-reckoned odometry and
        ground truth agree to 1e-6 m per metre travelled."""
        soil = SoilParams(cohesion_kpa=80.0, friction_angle_deg=44.0,
                          rolling_resistance=0.0)
        cases = [
            (LocomotionMode.ACKERMANN, AckermannCommand(0.1, 0.05)),
            (LocomotionMode.POINT_TURN, PointTurnCommand(0.15)),
            (LocomotionMode.CRAB, CrabCommand(0.1, 0.4)),
            (LocomotionMode.SKID, SkidCommand(0.1, 0.05)),
        ]
        for mode, cmd in cases:
            terr = TerrainModel.flat(15.0, 12.0, soil=soil)
            w = World(GEO, terr, Pose2p5(5.0, 6.0, 0.0))
            sim = Simulator(w)
            mgr = LocomotionManager(GEO)
            if mgr.mode is not mode:
                mgr.handle_command(ChangeMode(mode), 0.0)
            dead = w.pose
            travelled = 0.0
            for k in range(1000):
                now = k * 0.01
                if k % 5 == 0:
                    mgr.handle_command(Speed(cmd), now)
                sp = mgr.tick(now)
                st = mgr.state()
                out = ManagerOutput(sp.steering_rad, sp.speed_radps, mgr.mode,
                                    BodyTwist(0, 0, 0), st.phase is Phase.DRIVING)
                # odometry consumes the same control-boundary wheel states the
                # stepper integrates from
                twist, _ = forward_odometry(w.wheel_states(), GEO)
                for _ in range(10):
                    sim.step(out)
                dead = integrate_pose(dead, twist, 0.01)
                travelled += math.hypot(twist.vx_mps, twist.vy_mps) * 0.01
            err = math.hypot(dead.x_m - w.pose.x_m, dead.y_m - w.pose.y_m)
            assert err <= 1e-6 * max(travelled, 1.0), (mode, err, travelled)

    def test_blocked_obstacle_stops_rover(self):
        ob = Obstacle(polygon=((4.5, 1.0), (4.8, 1.0), (4.8, 4.5), (4.5, 4.5)),
                      height_m=0.18)  # 1.2 r
        w = make_world(0.0, pose=Pose2p5(3.0, 2.75, 0.0), obstacles=[ob])
        run_sim(w, LocomotionMode.ACKERMANN, AckermannCommand(0.05, 0.0), 40.0)
        assert any(e.kind == "obstacle_blocked" for e in w.events)
        # stopped before the footprint
        assert w.pose.x_m < 4.5 - 0.6
        assert w.terminal is None

    def test_traversable_obstacle_crossed(self):
        ob = Obstacle(polygon=((4.5, 1.0), (4.8, 1.0), (4.8, 4.5), (4.5, 4.5)),
                      height_m=0.15)  # exactly r
        w = make_world(0.0, pose=Pose2p5(3.0, 2.75, 0.0), obstacles=[ob])
        run_sim(w, LocomotionMode.ACKERMANN, AckermannCommand(0.05, 0.0), 60.0)
        assert not any(e.kind == "obstacle_blocked" for e in w.events)
        assert w.pose.x_m > 5.6

    def test_out_of_bounds_is_terminal(self):
        terr = TerrainModel.flat(10.0, 5.5)
        w = World(GEO, terr, Pose2p5(8.5, 2.75, 0.0))
        run_sim(w, LocomotionMode.ACKERMANN, AckermannCommand(0.1, 0.0), 12.0)
        assert w.terminal == "OutOfBounds"
        assert any(e.kind == "OutOfBounds" for e in w.events)
