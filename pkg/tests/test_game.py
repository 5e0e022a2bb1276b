import math
import random

import pytest

from mesb.cards import CardCatalog, builtin_catalog, minion, spell
from mesb.deck import Deck, random_deck
from mesb.game import (
    ATTACK,
    END_TURN,
    HERO,
    NO_TARGET,
    PLAY,
    GameError,
    GameState,
    HeuristicWeights,
    IllegalAction,
    PlayerState,
    apply_action,
    evaluate_deck,
    heuristic_score,
    legal_actions,
    new_game,
    pass_policy,
    plan_turn,
    play_game,
    random_policy,
    respects_taunt,
    rules_for,
    simulate,
)

CAT = CardCatalog((
    minion("one", "One", 1, 1, 1),
    minion("two_one", "Two One", 2, 2, 1),
    minion("guard", "Guard", 2, 1, 3, "taunt"),
    minion("runner", "Runner", 3, 3, 1, "charge"),
    minion("brute", "Brute", 3, 3, 3),
    spell("bolt", "Bolt", 3, 4, "enemy-hero"),
    spell("zap", "Zap", 1, 2, "enemy-minion"),
    spell("wave", "Wave", 4, 1, "all-enemy-minions"),
    minion("big", "Big", 10, 10, 10),
    spell("far", "Far", 10, 1, "enemy-hero"),
))
IDX = {cid: i for i, cid in enumerate(CAT.ids)}
AGGRO = HeuristicWeights.preset("aggro")
CONTROL = HeuristicWeights.preset("control")


def minion_on_board(cid, ready=True, health=None):
    c = CAT[cid]
    return (IDX[cid], c.attack, c.health if health is None else health, ready)


def make_state(hand=(), mana=0, board=(), opp_board=(), opp_health=30, deck=(), opp_deck=()):
    rules = rules_for(CAT)
    me, opp = PlayerState([IDX[c] for c in deck]), PlayerState([IDX[c] for c in opp_deck])
    me.hand = [IDX[c] for c in hand]
    me.crystals = me.mana = mana
    me.board = list(board)
    opp.board = list(opp_board)
    opp.health = opp_health
    return GameState(rules, [me, opp], active=0, turn=1)


def all_sequences(state):
    """Every action sequence to end of turn: (actions, final state) pairs."""
    out = []
    stack = [([], state)]
    while stack:
        seq, s = stack.pop()
        if s.over:
            out.append((seq, s))
            continue
        for act in legal_actions(s):
            if act == END_TURN:
                out.append((seq + [act], s))
            else:
                stack.append((seq + [act], apply_action(s, act)))
    return out


class TestLegalActions:
    def test_empty(self):
        assert legal_actions(make_state(mana=1)) == [END_TURN]

    def test_one_minion(self):
        assert legal_actions(make_state(hand=["one"], mana=1)) == [(PLAY, 0, NO_TARGET), END_TURN]

    def test_unaffordable(self):
        assert legal_actions(make_state(hand=["big"], mana=9)) == [END_TURN]

    def test_taunt_forces_target(self):
        s = make_state(board=[minion_on_board("brute")],
                       opp_board=[minion_on_board("one"), minion_on_board("guard"), minion_on_board("two_one")])
        attacks = [a for a in legal_actions(s) if a[0] == ATTACK]
        # oracle: enumerate every (attacker, target) pair and keep those the taunt rule allows
        taunts = [j for j, m in enumerate(s.players[1].board) if CAT.cards[m[0]].keywords == ("taunt",)]
        expected = [(ATTACK, 0, j) for j in list(range(3)) + [HERO] if j in taunts]
        assert attacks == expected == [(ATTACK, 0, 1)]

    def test_targets_without_taunt(self):
        s = make_state(board=[minion_on_board("brute")], opp_board=[minion_on_board("one")])
        assert [a for a in legal_actions(s) if a[0] == ATTACK] == [(ATTACK, 0, 0), (ATTACK, 0, HERO)]

    def test_spells(self):
        s = make_state(hand=["zap", "bolt", "wave"], mana=10, opp_board=[minion_on_board("one"), minion_on_board("guard")])
        acts = legal_actions(s)
        assert (PLAY, 0, 0) in acts and (PLAY, 0, 1) in acts  # spells ignore taunt
        assert (PLAY, 1, HERO) in acts and (PLAY, 2, NO_TARGET) in acts

    def test_exhausted_and_zero_attack_do_not_attack(self):
        s = make_state(board=[minion_on_board("brute", ready=False)])
        assert legal_actions(s) == [END_TURN]

    def test_game_over(self):
        with pytest.raises(GameError):
            legal_actions(make_state(opp_health=0))


class TestApplyAction:
    def test_simultaneous_combat(self):
        s = make_state(board=[minion_on_board("two_one")], opp_board=[minion_on_board("one")])
        nxt = apply_action(s, (ATTACK, 0, 0))
        assert nxt.players[0].board == [] and nxt.players[1].board == []
        assert len(s.players[0].board) == 1  # input untouched

    def test_fatigue(self):
        s = make_state(opp_deck=())
        nxt = apply_action(s, END_TURN)
        opp = nxt.players[1]
        assert opp.health == 29 and opp.fatigue == 1
        assert nxt.active == 1 and opp.crystals == 1 and opp.mana == 1

    def test_face_spell(self):
        s = make_state(hand=["bolt"], mana=3)
        nxt = apply_action(s, (PLAY, 0, HERO))
        assert nxt.players[1].health == 26 and nxt.players[0].mana == 0

    def test_charge_and_exhaustion(self):
        s = make_state(hand=["runner", "brute"], mana=6)
        s = apply_action(s, (PLAY, 0, NO_TARGET))
        s = apply_action(s, (PLAY, 0, NO_TARGET))
        attackers = {a[1] for a in legal_actions(s) if a[0] == ATTACK}
        assert attackers == {0}

    def test_area_spell(self):
        s = make_state(hand=["wave"], mana=4, opp_board=[minion_on_board("one"), minion_on_board("guard")])
        nxt = apply_action(s, (PLAY, 0, NO_TARGET))
        assert [(m[0], m[2]) for m in nxt.players[1].board] == [(IDX["guard"], 2)]

    def test_draw_and_burn(self):
        s = make_state(deck=["one"], opp_deck=["one", "brute"])
        s.players[1].hand = [IDX["one"]] * 10
        nxt = apply_action(s, END_TURN)
        assert len(nxt.players[1].hand) == 10 and nxt.players[1].deck == [IDX["one"]]

    def test_illegal(self):
        with pytest.raises(IllegalAction):
            apply_action(make_state(), (PLAY, 0, NO_TARGET))


class TestPlanTurn:
    def test_only_end(self):
        plan = plan_turn(make_state(mana=1), AGGRO, random.Random(0), 50)
        assert plan.actions == [END_TURN]

    def test_takes_lethal(self):
        s = make_state(board=[minion_on_board("brute")], opp_health=2, hand=["one", "zap"], mana=2,
                       opp_board=[minion_on_board("one")])
        # oracle: exhaustive enumeration of sequences, best heuristic value
        best = max(heuristic_score(f, 0, AGGRO) for _, f in all_sequences(s))
        assert best == math.inf
        plan = plan_turn(s, AGGRO, random.Random(1), 200)
        assert plan.score == math.inf
        assert (ATTACK, 0, HERO) in plan.actions
        state = s
        for act in plan.actions:
            state = apply_action(state, act)
        assert state.winner() == 0

    def test_reaches_exhaustive_optimum_on_small_state(self):
        s = make_state(hand=["one", "zap", "two_one"], mana=3, board=[minion_on_board("brute")],
                       opp_board=[minion_on_board("two_one"), minion_on_board("one")])
        best = max(heuristic_score(f, 0, CONTROL) for _, f in all_sequences(s))
        plan = plan_turn(s, CONTROL, random.Random(2), 2000)
        assert plan.score == pytest.approx(best)

    def test_transpositions_hit_the_hash(self):
        s = make_state(board=[minion_on_board("one"), minion_on_board("brute")])
        plan = plan_turn(s, AGGRO, random.Random(3), 200)
        assert plan.hash_hits >= 1
        # 4 distinct states exist: start, hit with 0, hit with 1, both
        assert plan.expanded <= 4
        assert plan.evaluated <= 4


BASIC = builtin_catalog("basic")


def two_decks(seed=0):
    rng = random.Random(seed)
    return random_deck(BASIC, rng), random_deck(BASIC, rng)


class TestPlayGame:
    def test_fatigue_schedule(self):
        """Pass-only agents: the second player empties first and dies on its 34th turn."""
        cat = CardCatalog(tuple(minion(f"m{i}", f"M{i}", 10, 1, 1) for i in range(15)))
        deck = [c for c in cat.ids for _ in range(2)]
        state = new_game(cat, deck, deck, random.Random(0))
        simulate(state, (pass_policy, pass_policy), random.Random(0))
        # player 1: 30 - 4 = 26 draws, then fatigue 1..8 (sum 36) on turns 27..34
        # player 0: 30 - 3 = 27 draws, then fatigue 1..7 (sum 28) by its turn 34
        assert state.winner() == 0
        assert state.turn == 68
        assert (state.players[0].health, state.players[1].health) == (2, -6)

    def test_deterministic(self):
        a, b = two_decks()
        first = play_game(a, b, AGGRO, CONTROL, 99, BASIC, 50)
        assert all(play_game(a, b, AGGRO, CONTROL, 99, BASIC, 50) == first for _ in range(3))

    def test_seat_swap_reports_from_deck_a(self):
        a, b = two_decks(1)
        out = play_game(a, b, AGGRO, AGGRO, 5, BASIC, 30, a_first=False)
        assert out.health_margin == out.final_health[0] - out.final_health[1]
        if out.winner is not None:
            assert out.final_health[out.winner] > 0 >= out.final_health[1 - out.winner]

    def test_invalid_deck(self):
        a, _ = two_decks()
        with pytest.raises(ValueError):
            play_game(Deck(["wisp"] * 30), a, AGGRO, AGGRO, 0, BASIC)

    @pytest.mark.slow
    def test_mirror_match_first_player_rate(self):
        """Seat-swapped replays of identical decks agree on the first-player winrate."""
        deck, _ = two_decks(2)
        n = 2000
        rates = []
        for a_first in (True, False):
            first_wins = 0
            for s in range(n):
                out = play_game(deck, deck, AGGRO, AGGRO, s, BASIC, 20, a_first=a_first)
                first_seat_winner = 0 if a_first else 1
                first_wins += out.winner == first_seat_winner
            rates.append(first_wins / n)
        assert abs(rates[0] - rates[1]) <= 0.04


class TestEvaluateDeck:
    def test_margin_arithmetic(self, monkeypatch):
        from mesb import game
        from mesb.game import GameOutcome

        results = iter([GameOutcome(0, 10, 9, (10, 0)), GameOutcome(1, -7, 9, (0, 7))])
        monkeypatch.setattr(game, "play_game", lambda *a, **k: next(results))
        a, b = two_decks()
        res = evaluate_deck(a, [(b, AGGRO)], 2, AGGRO, 0, BASIC)
        assert (res.fitness, res.winrate) == (3, 0.5)

    def test_round_robin_and_draws(self):
        a, b = two_decks(3)
        c, _ = two_decks(4)
        opponents = [(b, AGGRO), (c, CONTROL)]
        res = evaluate_deck(a, opponents, 5, AGGRO, 17, BASIC, sample_budget=10, turn_limit=2)
        from mesb.game import derive_seed

        margins = [
            play_game(a, opponents[g % 2][0], AGGRO, opponents[g % 2][1], derive_seed(17, g), BASIC, 10, 2,
                      a_first=(g % 2 == 0)).health_margin
            for g in range(5)
        ]
        assert res.fitness == sum(margins)
        assert res.draws == 5 and res.winrate == 0.0

    def test_empty_pool(self):
        a, _ = two_decks()
        with pytest.raises(GameError):
            evaluate_deck(a, [], 2, AGGRO, 0, BASIC)


def test_fuzz_small():
    a, b = two_decks(5)
    rng = random.Random(0)
    for g in range(300):
        state = new_game(BASIC, a.cards, b.cards, rng)
        verdicts = []
        simulate(state, (random_policy, random_policy), rng, check=True,
                 observer=lambda s, act: verdicts.append(respects_taunt(s, act)))
        assert all(verdicts)
        assert state.over or state.turn == 100


def test_respects_taunt_flags_violations():
    s = make_state(board=[minion_on_board("brute")], opp_board=[minion_on_board("one"), minion_on_board("guard")])
    assert respects_taunt(s, (ATTACK, 0, 1))
    assert not respects_taunt(s, (ATTACK, 0, HERO))
    assert not respects_taunt(s, (ATTACK, 0, 0))
