"""Simplified card-game simulator and greedy turn-local agents.

Rules subset: minions (optional taunt/charge) and direct-damage spells, mana
crystals ramping to 10, hand cap 10, board cap 7, escalating fatigue damage on
empty-deck draws, and a round cap after which the game is a draw.

Actions are plain tuples::

    (END,)                      end the turn
    (PLAY, hand_index, target)  play a card; target is HERO, a board index, or NO_TARGET
    (ATTACK, board_index, target)
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .cards import MINION, CardCatalog
from .deck import Deck, check_deck

END, PLAY, ATTACK = 0, 1, 2
HERO, NO_TARGET = -1, -2
END_TURN = (END,)

START_HEALTH = 30
MAX_MANA = 10
HAND_CAP = 10
BOARD_CAP = 7
DEFAULT_TURN_LIMIT = 50
DEFAULT_SAMPLE_BUDGET = 200

_T_HERO, _T_MINION, _T_ALL = 0, 1, 2
_TARGET_CODES = {"enemy-hero": _T_HERO, "enemy-minion": _T_MINION, "all-enemy-minions": _T_ALL}


class GameError(ValueError):
    pass


class IllegalAction(GameError):
    pass


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any mix of ints and strings."""
    blob = "/".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "big") >> 1


class Rules:
    """Per-catalog lookup tables indexed by card position."""

    def __init__(self, catalog: CardCatalog):
        self.catalog = catalog
        self.cost = [c.mana_cost for c in catalog]
        self.is_minion = [c.kind == MINION for c in catalog]
        self.attack = [c.attack or 0 for c in catalog]
        self.health = [c.health or 0 for c in catalog]
        self.taunt = ["taunt" in c.keywords for c in catalog]
        self.charge = ["charge" in c.keywords for c in catalog]
        self.damage = [c.spell_effect.damage if c.spell_effect else 0 for c in catalog]
        self.target = [_TARGET_CODES[c.spell_effect.target] if c.spell_effect else -1 for c in catalog]


_RULES_CACHE: dict[int, Rules] = {}


def rules_for(catalog: CardCatalog) -> Rules:
    r = _RULES_CACHE.get(id(catalog))
    if r is None or r.catalog is not catalog:
        r = Rules(catalog)
        _RULES_CACHE[id(catalog)] = r
    return r


class PlayerState:
    """One side of the table. Minions are tuples ``(card, attack, health, ready)``."""

    __slots__ = ("health", "crystals", "mana", "hand", "deck", "board", "fatigue")

    def __init__(self, deck: list[int]):
        self.health = START_HEALTH
        self.crystals = 0
        self.mana = 0
        self.hand: list[int] = []
        self.deck = deck
        self.board: list[tuple[int, int, int, bool]] = []
        self.fatigue = 0

    def copy(self) -> "PlayerState":
        p = PlayerState.__new__(PlayerState)
        p.health = self.health
        p.crystals = self.crystals
        p.mana = self.mana
        p.hand = self.hand[:]
        p.deck = self.deck[:]
        p.board = self.board[:]
        p.fatigue = self.fatigue
        return p

    def key(self) -> tuple:
        return (self.health, self.crystals, self.mana, tuple(self.hand), tuple(self.deck),
                tuple(self.board), self.fatigue)


class GameState:
    __slots__ = ("rules", "players", "active", "turn")

    def __init__(self, rules: Rules, players: list[PlayerState], active: int = 0, turn: int = 0):
        self.rules = rules
        self.players = players
        self.active = active
        self.turn = turn

    def copy(self) -> "GameState":
        return GameState(self.rules, [self.players[0].copy(), self.players[1].copy()], self.active, self.turn)

    def key(self) -> tuple:
        """Canonical encoding of everything that affects play."""
        return (self.active, self.turn, self.players[0].key(), self.players[1].key())

    @property
    def over(self) -> bool:
        return self.players[0].health <= 0 or self.players[1].health <= 0

    @property
    def round(self) -> int:
        return (self.turn + 1) // 2

    def winner(self) -> Optional[int]:
        if self.players[0].health <= 0:
            return 1
        if self.players[1].health <= 0:
            return 0
        return None


def new_game(catalog: CardCatalog, deck0: Sequence[str], deck1: Sequence[str], rng) -> GameState:
    """Shuffle both decks, deal 3/4 opening cards and start player 0's first turn."""
    rules = rules_for(catalog)
    piles = []
    for deck in (deck0, deck1):
        pile = [catalog.index_of(c) for c in deck]
        rng.shuffle(pile)
        piles.append(pile)
    state = GameState(rules, [PlayerState(piles[0]), PlayerState(piles[1])])
    for p, n in ((state.players[0], 3), (state.players[1], 4)):
        for _ in range(n):
            p.hand.append(p.deck.pop())
    _start_turn(state)
    return state


def _draw(p: PlayerState) -> None:
    if p.deck:
        card = p.deck.pop()
        if len(p.hand) < HAND_CAP:
            p.hand.append(card)
    else:
        p.fatigue += 1
        p.health -= p.fatigue


def _start_turn(state: GameState) -> None:
    p = state.players[state.active]
    state.turn += 1
    if p.crystals < MAX_MANA:
        p.crystals += 1
    p.mana = p.crystals
    p.board = [(c, a, h, True) for c, a, h, _ in p.board]
    _draw(p)


def legal_actions(state: GameState) -> list[tuple]:
    if state.over:
        raise GameError("game is over")
    r = state.rules
    me = state.players[state.active]
    opp = state.players[1 - state.active]
    out = []
    seen = set()
    n_opp = len(opp.board)
    for i, card in enumerate(me.hand):
        if card in seen or r.cost[card] > me.mana:
            continue
        seen.add(card)
        if r.is_minion[card]:
            if len(me.board) < BOARD_CAP:
                out.append((PLAY, i, NO_TARGET))
        else:
            t = r.target[card]
            if t == _T_HERO:
                out.append((PLAY, i, HERO))
            elif t == _T_ALL:
                out.append((PLAY, i, NO_TARGET))
            else:
                for j in range(n_opp):
                    out.append((PLAY, i, j))
    taunts = [j for j, m in enumerate(opp.board) if r.taunt[m[0]]]
    targets = taunts if taunts else list(range(n_opp)) + [HERO]
    for a, m in enumerate(me.board):
        if m[3] and m[1] > 0:
            for j in targets:
                out.append((ATTACK, a, j))
    out.append(END_TURN)
    return out


def _step(state: GameState, action: tuple) -> None:
    """Apply a legal action in place."""
    kind = action[0]
    me = state.players[state.active]
    opp = state.players[1 - state.active]
    r = state.rules
    if kind == END:
        state.active = 1 - state.active
        _start_turn(state)
        return
    if kind == PLAY:
        card = me.hand.pop(action[1])
        me.mana -= r.cost[card]
        if r.is_minion[card]:
            me.board.append((card, r.attack[card], r.health[card], r.charge[card]))
            return
        dmg = r.damage[card]
        t = r.target[card]
        if t == _T_HERO:
            opp.health -= dmg
        elif t == _T_MINION:
            j = action[2]
            c, a, h, ready = opp.board[j]
            if h > dmg:
                opp.board[j] = (c, a, h - dmg, ready)
            else:
                del opp.board[j]
        else:
            opp.board = [(c, a, h - dmg, ready) for c, a, h, ready in opp.board if h > dmg]
        return
    # attack
    ai, j = action[1], action[2]
    c, a, h, _ = me.board[ai]
    if j == HERO:
        opp.health -= a
        me.board[ai] = (c, a, h, False)
        return
    dc, da, dh, dready = opp.board[j]
    if dh > a:
        opp.board[j] = (dc, da, dh - a, dready)
    else:
        del opp.board[j]
    if h > da:
        me.board[ai] = (c, a, h - da, False)
    else:
        del me.board[ai]


def apply_action(state: GameState, action: tuple) -> GameState:
    """Successor state; the input is not modified."""
    if state.over:
        raise GameError("game is over")
    if tuple(action) not in legal_actions(state):
        raise IllegalAction(f"illegal action {action!r}")
    nxt = state.copy()
    _step(nxt, tuple(action))
    return nxt


def check_invariants(state: GameState) -> list[str]:
    bad = []
    for i, p in enumerate(state.players):
        if len(p.board) > BOARD_CAP:
            bad.append(f"player {i} board size {len(p.board)}")
        if len(p.hand) > HAND_CAP:
            bad.append(f"player {i} hand size {len(p.hand)}")
        if p.health > START_HEALTH:
            bad.append(f"player {i} health {p.health}")
        if not 0 <= p.crystals <= MAX_MANA or not 0 <= p.mana <= p.crystals:
            bad.append(f"player {i} mana {p.mana}/{p.crystals}")
        if any(m[2] < 1 or m[1] < 0 for m in p.board):
            bad.append(f"player {i} has a dead minion on board")
    return bad


def respects_taunt(state: GameState, action: tuple) -> bool:
    """False iff ``action`` attacks past a living enemy taunt minion."""
    if action[0] != ATTACK:
        return True
    r = state.rules
    opp = state.players[1 - state.active].board
    if not any(r.taunt[m[0]] for m in opp):
        return True
    return action[2] != HERO and r.taunt[opp[action[2]][0]]


# --- agents -----------------------------------------------------------------

FEATURES = (
    "opponent_hero_damage",
    "own_hero_health",
    "own_board_attack",
    "own_board_health",
    "opponent_board_attack",
    "opponent_board_health",
    "hand_size",
)

PRESETS = {
    "aggro": (3.0, 0.5, 1.0, 0.5, -0.5, -0.5, 0.5),
    "control": (0.5, 1.0, 2.0, 2.0, -2.0, -2.0, 0.5),
}


@dataclass(frozen=True)
class HeuristicWeights:
    style: str = "aggro"
    weights: tuple[float, ...] = PRESETS["aggro"]

    def __post_init__(self):
        if len(self.weights) != len(FEATURES):
            raise GameError(f"expected {len(FEATURES)} heuristic weights, got {len(self.weights)}")

    @classmethod
    def preset(cls, style: str, **overrides: float) -> "HeuristicWeights":
        if style not in PRESETS:
            raise GameError(f"unknown play style {style!r}")
        w = dict(zip(FEATURES, PRESETS[style]))
        for name, value in overrides.items():
            if name not in w:
                raise GameError(f"unknown heuristic feature {name!r}")
            w[name] = float(value)
        return cls(style, tuple(w[f] for f in FEATURES))

    def to_dict(self) -> dict:
        return {"style": self.style, "weights": dict(zip(FEATURES, self.weights))}

    @classmethod
    def from_spec(cls, spec) -> "HeuristicWeights":
        """Accept a preset name or ``{"style": ..., "weights": {feature: value}}``."""
        if isinstance(spec, HeuristicWeights):
            return spec
        if isinstance(spec, str):
            return cls.preset(spec)
        return cls.preset(spec.get("style", "aggro"), **(spec.get("weights") or {}))


def heuristic_score(state: GameState, player: int, weights: HeuristicWeights) -> float:
    me = state.players[player]
    opp = state.players[1 - player]
    if opp.health <= 0:
        return math.inf
    if me.health <= 0:
        return -math.inf
    w = weights.weights
    return (
        w[0] * (START_HEALTH - opp.health)
        + w[1] * me.health
        + w[2] * sum(m[1] for m in me.board)
        + w[3] * sum(m[2] for m in me.board)
        + w[4] * sum(m[1] for m in opp.board)
        + w[5] * sum(m[2] for m in opp.board)
        + w[6] * len(me.hand)
    )


@dataclass
class TurnPlan:
    actions: list[tuple]
    score: float
    expanded: int = 0
    evaluated: int = 0
    hash_hits: int = 0


def plan_turn(state: GameState, weights: HeuristicWeights, rng, sample_budget: int = DEFAULT_SAMPLE_BUDGET) -> TurnPlan:
    """Best of ``sample_budget`` random action sequences to end of turn.

    Intermediate states are hashed: each distinct state has its legal actions
    computed once and each distinct end-of-turn state is scored once.
    """
    player = state.active
    root_key = state.key()
    # key -> [state, actions, {action_index: child_key}]
    table: dict[tuple, list] = {root_key: [state, None, {}]}
    scores: dict[tuple, float] = {}
    plan = TurnPlan([END_TURN], -math.inf)
    for _ in range(max(1, sample_budget)):
        key = root_key
        seq = []
        while True:
            node = table[key]
            cur = node[0]
            if cur.over:
                break
            if node[1] is None:
                node[1] = legal_actions(cur)
                plan.expanded += 1
            actions = node[1]
            i = rng.randrange(len(actions))
            act = actions[i]
            if act[0] == END:
                break
            seq.append(act)
            child_key = node[2].get(i)
            if child_key is None:
                child = cur.copy()
                _step(child, act)
                child_key = child.key()
                if child_key in table:
                    plan.hash_hits += 1
                else:
                    table[child_key] = [child, None, {}]
                node[2][i] = child_key
            key = child_key
        if key in scores:
            plan.hash_hits += 1
            continue
        score = heuristic_score(table[key][0], player, weights)
        scores[key] = score
        plan.evaluated += 1
        if score > plan.score:
            plan.score = score
            plan.actions = seq + ([] if table[key][0].over else [END_TURN])
            if score == math.inf:
                break
    return plan


def pass_policy(state: GameState, rng) -> list[tuple]:
    return [END_TURN]


def random_policy(state: GameState, rng) -> list[tuple]:
    """One uniformly random legal action (the turn continues until it picks END)."""
    acts = legal_actions(state)
    return [acts[rng.randrange(len(acts))]]


def greedy_policy(weights: HeuristicWeights, sample_budget: int = DEFAULT_SAMPLE_BUDGET):
    def policy(state, rng):
        return plan_turn(state, weights, rng, sample_budget).actions

    return policy


@dataclass(frozen=True)
class GameOutcome:
    winner: Optional[int]
    health_margin: int
    turns: int
    final_health: tuple[int, int] = (START_HEALTH, START_HEALTH)


def simulate(state: GameState, policies, rng, turn_limit: int = DEFAULT_TURN_LIMIT,
             check: bool = False, observer=None) -> GameState:
    """Run ``policies[player](state, rng) -> actions`` until a hero dies or the round cap.

    Mutates ``state``. With ``check`` every action is validated against
    ``legal_actions`` and invariants are asserted after each step.
    """
    while not state.over and state.turn <= 2 * turn_limit:
        for act in policies[state.active](state, rng):
            if act[0] == END and state.turn >= 2 * turn_limit:
                return state
            if check:
                if act not in legal_actions(state):
                    raise IllegalAction(f"policy produced illegal action {act!r}")
            if observer is not None:
                observer(state, act)
            _step(state, act)
            if check:
                bad = check_invariants(state)
                if bad:
                    raise GameError("invariant violated: " + "; ".join(bad))
            if state.over:
                break
    return state


def outcome_of(state: GameState) -> GameOutcome:
    h0, h1 = state.players[0].health, state.players[1].health
    return GameOutcome(state.winner(), h0 - h1, state.turn, (h0, h1))


def play_game(deck_a: Deck, deck_b: Deck, weights_a: HeuristicWeights, weights_b: HeuristicWeights,
              seed: int, catalog: CardCatalog, sample_budget: int = DEFAULT_SAMPLE_BUDGET,
              turn_limit: int = DEFAULT_TURN_LIMIT, a_first: bool = True) -> GameOutcome:
    """One seeded game. Winner and margin are reported from deck_a's side (player 0)."""
    check_deck(deck_a, catalog)
    check_deck(deck_b, catalog)
    rng = random.Random(seed)
    # shuffle order is tied to the deck, not the seat
    pile_a = list(deck_a.cards)
    pile_b = list(deck_b.cards)
    rng.shuffle(pile_a)
    rng.shuffle(pile_b)
    first, second = (pile_a, pile_b) if a_first else (pile_b, pile_a)
    state = new_game(catalog, first, second, _NoShuffle(rng))
    pa = greedy_policy(weights_a, sample_budget)
    pb = greedy_policy(weights_b, sample_budget)
    simulate(state, (pa, pb) if a_first else (pb, pa), rng, turn_limit)
    out = outcome_of(state)
    if a_first:
        return out
    winner = None if out.winner is None else 1 - out.winner
    h1, h0 = out.final_health
    return GameOutcome(winner, h0 - h1, out.turns, (h0, h1))


class _NoShuffle:
    def __init__(self, rng):
        self.rng = rng

    def shuffle(self, _):
        pass


@dataclass(frozen=True)
class FitnessResult:
    fitness: int
    winrate: float
    wins: int = 0
    losses: int = 0
    draws: int = 0
    games: int = 0


def evaluate_deck(deck: Deck, opponents: Sequence, games: int, weights: HeuristicWeights, seed: int,
                  catalog: CardCatalog, sample_budget: int = DEFAULT_SAMPLE_BUDGET,
                  turn_limit: int = DEFAULT_TURN_LIMIT) -> FitnessResult:
    """Sum of health margins over ``games`` games against ``(deck, weights)`` opponents.

    Games go round-robin over opponents; the candidate moves first on even
    game indices. Draws add their margin but never count as wins.
    """
    if not opponents:
        raise GameError("opponent pool is empty")
    if games < 1:
        raise GameError("games must be >= 1")
    fitness = wins = losses = draws = 0
    for g in range(games):
        opp_deck, opp_weights = opponents[g % len(opponents)]
        out = play_game(deck, opp_deck, weights, opp_weights, derive_seed(seed, g), catalog,
                        sample_budget, turn_limit, a_first=(g % 2 == 0))
        fitness += out.health_margin
        if out.winner == 0:
            wins += 1
        elif out.winner == 1:
            losses += 1
        else:
            draws += 1
    return FitnessResult(fitness, wins / games, wins, losses, draws, games)
