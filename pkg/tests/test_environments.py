import math

import numpy as np
import pytest

from trussforge.core import Vec3
from trussforge.environments import (
    MOUND_BOX_HEIGHT,
    MOUND_RAMP_LENGTH,
    SKYLIGHT_CLEARANCE,
    STEP_HEIGHT,
    STEP_OBSTACLE_OFFSET,
    Environment,
    FeatureNotFound,
    contact_query,
    environment_from_dict,
    environment_to_dict,
    flat_env,
    mound_env,
    pit_env,
    skylight_env,
    square_polygon,
    step_env,
    support_height,
)


class TestContactQuery:
    def test_point_above_floor_is_free(self):
        assert contact_query(flat_env(), Vec3(0, 0, 0.01)) is None

    def test_point_below_floor_penetrates(self):
        q = contact_query(flat_env(), Vec3(0, 0, -0.001))
        assert q is not None
        assert q.depth == pytest.approx(0.001)
        assert tuple(q.normal) == (0.0, 0.0, 1.0)

    def test_ramp_normal_matches_plane_equation(self):
        env = mound_env()
        incline = math.asin(MOUND_BOX_HEIGHT / MOUND_RAMP_LENGTH)
        # probe just under the sloped surface mid-ramp
        x = 0.25
        surf_z = x * math.tan(incline)
        q = contact_query(env, Vec3(x, 0, surf_z - 0.002))
        assert q is not None and q.feature == "ramp"
        expect = np.array([-math.sin(incline), 0.0, math.cos(incline)])
        assert np.allclose(q.normal, expect, atol=1e-12)
        assert np.linalg.norm(q.normal) == pytest.approx(1.0, abs=1e-12)

    def test_deepest_feature_wins(self):
        env = mound_env()
        # inside the box, near its top: the box pushout is the smallest but
        # the box penetration is deeper than the floor's
        q = contact_query(env, Vec3(0.9, 0, 0.19))
        assert q is not None and q.feature == "mound"


class TestMoundEnv:
    def test_box_top_height(self):
        env = mound_env()
        assert support_height(env, 0.9, 0.0) == pytest.approx(0.20, abs=1e-9)

    def test_ramp_midpoint_interpolates(self):
        env = mound_env()
        run = MOUND_RAMP_LENGTH * math.cos(math.asin(MOUND_BOX_HEIGHT / MOUND_RAMP_LENGTH))
        mid = support_height(env, run / 2, 0.0)
        assert mid == pytest.approx(0.10, abs=1e-6)

    def test_far_field_is_floor(self):
        env = mound_env()
        assert support_height(env, -2.0, 0.0) == pytest.approx(0.0, abs=1e-9)


class TestStepEnv:
    def test_heights_across_the_step(self):
        env = step_env()
        assert support_height(env, -0.5, 0.0) == pytest.approx(STEP_HEIGHT, abs=1e-9)
        assert support_height(env, 0.5, 0.0) == pytest.approx(0.0, abs=1e-9)

    def test_obstacle_position(self):
        env = step_env()
        assert support_height(env, STEP_OBSTACLE_OFFSET, 0.0) == pytest.approx(
            0.25, abs=1e-9)

    def test_past_obstacle_is_lower_floor(self):
        env = step_env()
        assert support_height(env, 1.0, 0.0) == pytest.approx(0.0, abs=1e-9)


class TestSkylightEnv:
    def test_center_clearance(self):
        env = skylight_env()
        ceiling = next(f for f in env.features if f.label == "ceiling")
        assert ceiling.height == pytest.approx(SKYLIGHT_CLEARANCE)
        # probing into the slab from below, outside the cutout
        q = contact_query(env, Vec3(0.6, 0.0, SKYLIGHT_CLEARANCE + 0.001))
        assert q is not None and q.feature == "ceiling"

    def test_inside_cutout_no_ceiling_contact(self):
        env = skylight_env()
        q = contact_query(env, Vec3(0.0, 0.0, SKYLIGHT_CLEARANCE + 0.001))
        assert q is None or q.feature != "ceiling"

    def test_sloped_floor_normal(self):
        env = skylight_env(slope=math.radians(10))
        q = contact_query(env, Vec3(0.5, 0, -math.tan(math.radians(10)) * 0.5 - 0.002))
        assert q is not None and q.feature == "floor"
        expect = np.array([math.sin(math.radians(10)), 0, math.cos(math.radians(10))])
        assert np.allclose(q.normal, expect, atol=1e-9)


class TestPitEnv:
    def test_floor_inside_opening_is_recessed(self):
        env = pit_env(depth=0.35, opening=square_polygon(1.2))
        assert support_height(env, 0.0, 0.0) == pytest.approx(-0.35, abs=1e-9)

    def test_outside_opening_is_level(self):
        env = pit_env(depth=0.35, opening=square_polygon(1.2))
        assert support_height(env, 1.0, 0.0) == pytest.approx(0.0, abs=1e-9)

    def test_rim_boundary_counts_as_outside(self):
        env = pit_env(depth=0.35, opening=square_polygon(1.2))
        assert support_height(env, 0.6, 0.0) == pytest.approx(0.0, abs=1e-9)

    def test_underfloor_near_wall_pushes_into_pit(self):
        env = pit_env(depth=0.35, opening=square_polygon(1.2))
        q = contact_query(env, Vec3(0.601, 0.0, -0.1))
        assert q is not None
        assert q.normal[0] == pytest.approx(-1.0)  # back toward the opening


class TestJson:
    @pytest.mark.parametrize("builder", [flat_env, mound_env, step_env,
                                         skylight_env, pit_env])
    def test_round_trip(self, builder):
        env = builder()
        back = environment_from_dict(environment_to_dict(env))
        assert back.feature_labels() == env.feature_labels()
        assert back.gravity == env.gravity
        for x, y in [(0.3, 0.0), (0.9, 0.1), (-1.0, 0.4)]:
            assert support_height(back, x, y) == pytest.approx(
                support_height(env, x, y), abs=1e-9)

    def test_without_feature(self):
        env = mound_env()
        removed = env.without_feature("mound")
        assert "mound" not in removed.feature_labels()
        with pytest.raises(FeatureNotFound):
            env.without_feature("nope")
