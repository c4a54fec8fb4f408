import json

import pytest

from geosemnav.agent import (
    AgentParams,
    BASELINES,
    Decision,
    Episode,
    EpisodeResult,
    manhattan_bypass,
    run_episode,
)
from geosemnav.geosem import GeoSemMap, LandmarkParams, StepRecord
from geosemnav.perception import Detection, DetectorModel, EgoScene, segment_areas
from geosemnav.world import Action, ActionModel, RobotState, apply_action

from conftest import open_room
from oracles import oracle_visible_set

F, B, RL, RR = Action.FORWARD, Action.BACKWARD, Action.ROTATE_LEFT, Action.ROTATE_RIGHT


class StubKnowledge:
    def __init__(self, class_table, rp_map=None, zone=1.0):
        self.class_table = class_table
        self.rp_map = rp_map or {}
        self.zone = zone

    def rp(self, a, b):
        return self.rp_map.get((a, b), self.rp_map.get((b, a), 0.0))

    def zone_relation(self, classes, target):
        return self.zone


def det(cls, cx, conf=0.9, dist=3.0, restricted=False, extension=False, width=0.06):
    box = (cx - width / 2, 0.45, cx + width / 2, 0.55)
    return Detection(cls, conf, box, dist, restricted=restricted, extension=extension)


FULL_FLOOR = Detection("floor", 1.0, (0.0, 0.65, 1.0, 1.0), 4.0, extension=True)


def scene(class_table, *dets, fov=90.0, floor=(FULL_FLOOR,)):
    ego = EgoScene(
        detections=tuple(dets) + tuple(floor),
        free_cells=frozenset(),
        pose=(0, 0, 0),
        fov_deg=fov,
    )
    return segment_areas(ego, class_table, 3)


def run_decide(class_table, ego, know, plan=None, gmap=None, params=None):
    from geosemnav.agent import decide

    return decide(
        ego,
        "cup",
        know,
        gmap or GeoSemMap(LandmarkParams()),
        params or AgentParams(),
        ActionModel(),
        plan or open_room(),
    )


class TestDecide:
    def test_target_in_middle_moves_forward(self, class_table):
        ego = scene(class_table, det("cup", 0.5))
        d = run_decide(class_table, ego, StubKnowledge(class_table))
        assert d.rule == "relational"
        assert d.area_index == 1
        assert d.actions == [F]

    def test_restricted_areas_filtered_to_free_left(self, class_table):
        # restricted clutter in Middle and Right, open floor on the Left
        left_floor = Detection("floor", 1.0, (0.0, 0.65, 0.3, 1.0), 4.0, extension=True)
        ego = scene(
            class_table,
            det("sofa", 0.5, restricted=True),
            det("sofa", 0.85, restricted=True),
            floor=(left_floor,),
        )
        d = run_decide(class_table, ego, StubKnowledge(class_table))
        assert d.rule == "free_space"
        assert d.area_index == 0
        assert d.actions == [RL, F]

    def test_relational_area_sums_pick_middle(self, class_table):
        know = StubKnowledge(
            class_table,
            {("chair", "cup"): 0.2, ("bottle", "cup"): 0.6, ("table", "cup"): 0.5},
        )
        ego = scene(
            class_table,
            det("chair", 0.15, conf=0.9),
            det("bottle", 0.5, conf=0.8),
            det("table", 0.55, conf=0.9),
        )
        d = run_decide(class_table, ego, know)
        assert d.rule == "relational"
        assert d.area_index == 1
        assert d.actions == [F]
        assert d.area_scores[0] == pytest.approx(0.18, abs=1e-12)
        assert d.area_scores[1] == pytest.approx(0.93, abs=1e-12)
        assert d.area_scores[2] == pytest.approx(0.0, abs=1e-12)

    def test_confidence_rescaling_keeps_the_argmax(self, class_table):
        know = StubKnowledge(
            class_table,
            {("chair", "cup"): 0.2, ("bottle", "cup"): 0.6, ("table", "cup"): 0.5},
        )
        picks = []
        for s in (0.25, 0.5, 1.0):
            ego = scene(
                class_table,
                det("chair", 0.15, conf=0.9 * s),
                det("bottle", 0.5, conf=0.8 * s),
                det("table", 0.55, conf=0.9 * s),
            )
            picks.append(run_decide(class_table, ego, know).area_index)
        assert picks == [1, 1, 1]

    def test_close_obstacle_discards_its_area(self, class_table):
        # same layout as the relational case, but the middle table is one
        # cell away, so its area is dropped and the chair side wins
        know = StubKnowledge(
            class_table,
            {("chair", "cup"): 0.2, ("bottle", "cup"): 0.6, ("table", "cup"): 0.5},
        )
        ego = scene(
            class_table,
            det("chair", 0.15, conf=0.9),
            det("bottle", 0.5, conf=0.8, dist=1.0),
            det("table", 0.55, conf=0.9, dist=1.0),
        )
        d = run_decide(class_table, ego, know)
        assert d.rule == "relational"
        assert d.area_index == 0

    def test_low_zone_with_door_heads_for_it(self, class_table):
        ego = scene(class_table, det("chair", 0.2), det("door", 0.5, extension=True))
        d = run_decide(class_table, ego, StubKnowledge(class_table, zone=0.05))
        assert d.rule == "opening"
        assert d.area_index == 1
        assert d.actions == [F]

    def test_far_side_door_needs_a_turn(self, class_table):
        ego = scene(
            class_table, det("door", 0.95, extension=True), fov=120.0
        )
        d = run_decide(class_table, ego, StubKnowledge(class_table, zone=0.05))
        assert d.rule == "opening"
        assert d.actions == [RR]

    def test_healthy_zone_skips_the_door(self, class_table):
        ego = scene(class_table, det("chair", 0.2), det("door", 0.5, extension=True))
        know = StubKnowledge(class_table, {("chair", "cup"): 0.3}, zone=0.9)
        d = run_decide(class_table, ego, know)
        assert d.rule == "relational"

    def test_nothing_left_retreats(self, class_table):
        blocked = scene(
            class_table,
            det("sofa", 0.2, restricted=True),
            det("sofa", 0.5, restricted=True),
            det("sofa", 0.85, restricted=True),
            floor=(),
        )
        gmap = GeoSemMap(LandmarkParams())
        d = run_decide(class_table, blocked, StubKnowledge(class_table), gmap=gmap)
        assert d.rule == "last_step"
        assert d.actions == [RL]
        gmap.steps.append(
            StepRecord(0, (1, 1, 0), F, (), 0.0, 0.0, 1.5)
        )
        d2 = run_decide(class_table, blocked, StubKnowledge(class_table), gmap=gmap)
        assert d2.actions == [B]

    def test_diminishing_scores_trigger_backtrack(self, class_table):
        plan = open_room(width=6, height=3)
        know = StubKnowledge(class_table, zone=0.8)

        def free_frame(*names):
            dets = tuple(det(n, 0.5) for n in names)
            return EgoScene(
                detections=dets + (FULL_FLOOR,),
                free_cells=frozenset({(x, 1) for x in range(6)}),
                pose=(0, 0, 0),
            )

        gmap = GeoSemMap(LandmarkParams(tau_lm=0.25))
        gmap.update(None, free_frame("cup"), RobotState(1, 1, 0), 0.0, "cup", know)
        gmap.update(RL, free_frame("cup"), RobotState(1, 1, 90), 1.0, "cup", know)
        gmap.update(RR, free_frame("cup"), RobotState(1, 1, 0), 2.0, "cup", know)
        gmap.update(F, free_frame("cup"), RobotState(2, 1, 0), 3.5, "cup", know)
        gmap.update(F, free_frame("cup"), RobotState(3, 1, 0), 5.0, "cup", know)
        # authored declining translation scores; update() alone cannot make
        # them because translations re-enter cells with zero rotation credit
        for score, pose in ((0.4, (4, 1, 0)), (0.3, (5, 1, 0)), (0.02, (5, 1, 0))):
            gmap.steps.append(
                StepRecord(len(gmap.steps), pose, F, (), score, 0.0, 0.0)
            )
            gmap._max_score = max(gmap._max_score, score)
        assert gmap.is_low()
        ego = segment_areas(free_frame(), class_table, 3)
        d = run_decide(class_table, ego, know, plan=plan, gmap=gmap)
        assert d.rule == "backtrack"
        # a full scan is appended after the journey back
        assert d.actions[-4:] == [RL, RL, RL, RL]
        state = RobotState(5, 1, 0)
        for a in d.actions[: -4]:
            state, was_blocked = apply_action(state, a, plan, ActionModel())
            assert not was_blocked
        assert state.xy in gmap.visited
        # deciding marks the backtrack, so the alarm is rearmed
        assert not gmap.is_low()

    def test_unsegmented_frame_rejected(self, class_table):
        ego = EgoScene(detections=(), free_cells=frozenset(), pose=(0, 0, 0))
        with pytest.raises(ValueError):
            run_decide(class_table, ego, StubKnowledge(class_table))

    def test_priority_order_is_center_out(self):
        assert AgentParams().priority() == (1, 0, 2)
        assert AgentParams(k_areas=5).priority() == (2, 1, 3, 0, 4)
        assert AgentParams(tie_break=(2, 0, 1)).priority() == (2, 0, 1)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            AgentParams(tau_zone=0.0)
        with pytest.raises(ValueError):
            AgentParams(k_areas=0)


class TestBypass:
    def room_with(self, objects, width=6, height=5):
        return open_room(width=width, height=height, objects=objects)

    def test_single_obstacle_sidestep(self, class_table):
        plan = self.room_with([{"class": "sofa", "at": [2, 2], "obstacle": True}])
        path = manhattan_bypass(plan, RobotState(1, 2, 0), ActionModel())
        assert path == [RR, F, RL, F, F, RL, F, RR]
        state = RobotState(1, 2, 0)
        for a in path:
            state, blocked = apply_action(state, a, plan, ActionModel())
            assert not blocked
        assert (state.x, state.y, state.heading_deg) == (3, 2, 0)

    def test_wall_on_the_right_forces_left_plan(self, class_table, make_plan):
        plan = make_plan({
            "name": "hug", "width": 6, "height": 5,
            "cells": ["......", "######", "......", "......", "......"],
            "zones": [{"label": "office", "rect": [0, 0, 5, 4]}],
            "objects": [{"class": "sofa", "at": [2, 2], "obstacle": True}],
        })
        path = manhattan_bypass(plan, RobotState(1, 2, 0), ActionModel())
        assert path is not None
        assert path[0] == RL
        state = RobotState(1, 2, 0)
        for a in path:
            state, blocked = apply_action(state, a, plan, ActionModel())
            assert not blocked
        assert (state.x, state.y, state.heading_deg) == (3, 2, 0)

    def test_full_width_blockage_fails(self, class_table, make_plan):
        plan = make_plan({
            "name": "plug", "width": 6, "height": 3,
            "cells": ["######", "......", "######"],
            "zones": [{"label": "office", "rect": [0, 0, 5, 2]}],
            "objects": [{"class": "sofa", "at": [2, 1], "obstacle": True}],
        })
        assert manhattan_bypass(plan, RobotState(1, 1, 0), ActionModel()) is None

    def test_detour_respects_max_cells(self, class_table, make_plan):
        # obstacle wall reaches so far sideways that 2 cells are not enough
        objects = [
            {"class": "sofa", "at": [3, y], "obstacle": True} for y in range(1, 8)
        ]
        plan = self.room_with(objects, width=8, height=9)
        tight = manhattan_bypass(plan, RobotState(2, 4, 0), ActionModel(), max_cells=2)
        assert tight is None
        wide = manhattan_bypass(plan, RobotState(2, 4, 0), ActionModel(), max_cells=6)
        assert wide is not None
        state = RobotState(2, 4, 0)
        for a in wide:
            state, blocked = apply_action(state, a, plan, ActionModel())
            assert not blocked
        assert (state.x, state.y, state.heading_deg) == (4, 4, 0)


class TestEpisode:
    def episode(self, plan, start, target, store, table, **kw):
        return Episode(plan, RobotState(*start), target, store, table, **kw)

    def test_fig3_golden_run(self, office_plan, corpus_store, class_table):
        ep = self.episode(office_plan, (1, 1, 0), "cup", corpus_store, class_table, seed=0)
        res = ep.run()
        assert res.success
        assert res.termination == "found"
        assert res.actions == ["Forward", "Forward", "Forward", "Forward", "Stop"]
        assert res.final_pose == (5, 1, 0)
        assert res.sim_time_s == pytest.approx(4 * 1.5 + 0.1 + 5 * 0.033, abs=1e-9)
        # every movement decision follows the relational rule toward Middle
        moves = [d for d in res.decisions if d["rule"] == "relational"]
        assert len(moves) == 4
        assert all(d["area_index"] == 1 for d in moves)
        assert any(d.class_name == "cup" for d in ep.last_ego.detections)

    def test_fig3_middle_outscores_chair_side(self, office_plan, corpus_store, class_table):
        # at (2,1) the chair sits alone on one side while bottle+table share
        # the middle band; the rule-4 sums must favor the middle
        ep = self.episode(
            office_plan, (2, 1, 0), "cup", corpus_store, class_table, seed=0,
            detector=DetectorModel(p_miss=0.0, confidence_noise_sd=0.0),
        )
        ep.process_frame(None)
        d = ep._next_decision()
        assert d.rule == "relational"
        assert d.area_index == 1
        chair_side = next(
            a.index
            for a in ep.last_ego.areas
            if "chair" in {ep.last_ego.detections[i].class_name for i in a.detection_indices}
        )
        assert d.area_scores[1] > d.area_scores[chair_side] > 0.0

    def test_target_visible_at_start_needs_no_movement(self, corpus_store, class_table):
        plan = open_room(objects=[{"class": "cup", "at": [3, 2]}])
        res = run_episode(plan, RobotState(1, 2, 0), "cup", corpus_store, class_table)
        assert res.success
        assert res.termination == "found"
        assert res.actions == ["Stop"]

    def test_absent_target_exhausts_without_success(self, corpus_store, class_table):
        plan = open_room(width=4, height=4)
        res = run_episode(
            plan, RobotState(1, 1, 0), "cup", corpus_store, class_table,
            landmark_params=LandmarkParams(budget=120),
        )
        assert not res.success
        assert res.termination in ("scan_full", "budget")
        assert res.steps <= 120

    def test_agent_traces_never_block(self, office_plan, webots_plan, corpus_store, class_table):
        from geosemnav import KnowledgeParams, bundled_corpus, ingest_corpus

        runs = [(office_plan, (1, 1, 0), s) for s in range(3)]
        runs.append((webots_plan, (2, 6, 0), 0))
        for plan, start, seed in runs:
            store = ingest_corpus(bundled_corpus(), KnowledgeParams(), class_table)
            target = "cup" if plan is office_plan else "orange"
            res = run_episode(plan, RobotState(*start), target, store, class_table, seed=seed)
            state = RobotState(*start)
            for name in res.actions:
                state, blocked = apply_action(state, Action(name), plan, ActionModel())
                assert not blocked, (plan.name, seed, name)
            assert (state.x, state.y, state.heading_deg) == res.final_pose

    def test_same_seed_same_run(self, office_plan, class_table):
        from geosemnav import KnowledgeParams, bundled_corpus, ingest_corpus

        outs = []
        for _ in range(2):
            store = ingest_corpus(bundled_corpus(), KnowledgeParams(), class_table)
            res = run_episode(
                office_plan, RobotState(1, 1, 0), "cup", store, class_table, seed=7
            )
            outs.append(res.to_json())
        assert outs[0] == outs[1]

    def test_quiet_first_frame_triggers_initial_scan(self, corpus_store, class_table):
        plan = open_room(width=8, height=8)
        ep = self.episode(plan, (4, 4, 0), "cup", corpus_store, class_table)
        ep.process_frame(None)
        d = ep._next_decision()
        assert d.rule == "initial_scan"
        assert d.actions == [RL, RL, RL, RL]

    def test_busy_first_frame_skips_the_scan(self, office_plan, corpus_store, class_table):
        ep = self.episode(office_plan, (1, 1, 0), "cup", corpus_store, class_table)
        ep.process_frame(None)
        assert ep._next_decision().rule != "initial_scan"

    def test_rotation_scan_counts_and_restores_heading(self, office_plan, corpus_store, class_table):
        ep = self.episode(office_plan, (1, 1, 0), "cup", corpus_store, class_table)
        ep.process_frame(None)
        frames = ep.rotation_scan()
        assert [h for h, _ in frames] == [90, 180, 270, 0]
        assert ep.state.heading_deg == 0

        ep45 = self.episode(
            office_plan, (1, 1, 0), "cup", corpus_store, class_table,
            action_model=ActionModel(rotation_deg=45),
        )
        ep45.process_frame(None)
        assert len(ep45.rotation_scan()) == 8
        assert ep45.state.heading_deg == 0

    def test_rotation_scan_union_matches_ray_oracle(self, office_plan, corpus_store, class_table):
        ep = self.episode(
            office_plan, (1, 1, 0), "cup", corpus_store, class_table,
            detector=DetectorModel(p_miss=0.0, confidence_noise_sd=0.0),
        )
        ep.process_frame(None)
        seen = {
            d.instance_index
            for _, ego in ep.rotation_scan()
            for d in ego.non_extension()
        }
        want = oracle_visible_set(office_plan, 1, 1, ep.detector.range_cells)
        assert seen == want

    def test_validation_errors(self, office_plan, corpus_store, class_table):
        with pytest.raises(KeyError):
            self.episode(office_plan, (1, 1, 0), "sphinx", corpus_store, class_table)
        with pytest.raises(ValueError):
            self.episode(office_plan, (1, 1, 0), "chair", corpus_store, class_table)
        with pytest.raises(ValueError):
            self.episode(office_plan, (0, 0, 0), "cup", corpus_store, class_table)

    def test_step_external_logs_blocked_attempts(self, corpus_store, class_table):
        plan = open_room(width=4, height=3)
        ep = self.episode(plan, (0, 1, 180), "cup", corpus_store, class_table)
        ep.process_frame(None)
        t0 = ep.sim_time
        ego, blocked = ep.step_external(F)  # faces the grid edge
        assert blocked
        assert ep.state.xy == (0, 1)
        assert ep.sim_time > t0 + 1.4  # the bump still costs its duration
        assert ep.gmap.steps[-1].blocked
        ego, blocked = ep.step_external(RR)
        assert not blocked
        assert ep.state.heading_deg == 90


class TestBaselines:
    def test_policies_registered(self):
        assert sorted(BASELINES) == ["greedy_free_space", "random_walk"]

    def test_random_walk_terminates_within_budget(self, office_plan, corpus_store, class_table):
        ep = Episode(
            office_plan, RobotState(1, 1, 0), "cup", corpus_store, class_table,
            seed=3, landmark_params=LandmarkParams(budget=40),
        )
        res = ep.run(policy=BASELINES["random_walk"])
        assert res.steps <= 40
        assert res.termination in ("found", "budget", "scan_full")
        # bumping into things injects recovery plans between random picks
        assert {d["rule"] for d in res.decisions} <= {"random", "bypass", "recover"}

    def test_greedy_runs_forward_when_clear(self, office_plan, corpus_store, class_table):
        ep = Episode(
            office_plan, RobotState(1, 1, 0), "cup", corpus_store, class_table,
            seed=0, landmark_params=LandmarkParams(budget=40),
        )
        res = ep.run(policy=BASELINES["greedy_free_space"])
        assert res.decisions[0]["rule"] == "greedy"
        assert res.decisions[0]["actions"] == ["Forward"]
