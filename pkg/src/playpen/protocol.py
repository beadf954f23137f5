"""Line-delimited JSON protocol over TCP exposing the environment, the social
partner and the goal machinery to external processes.

One JSON object per line, UTF-8. Every response echoes the request's "id".
Sessions map one-to-one onto connections: requests within a connection are
served strictly in order, while connections are independent and concurrent.
The schema is documented in docs/protocol.schema.json.
"""

from __future__ import annotations

import json
import math
import socketserver
import threading

from . import grammar, imagination
from .agents import setup_episode
from .config import RunConfig
from .episodes import EpisodeLogWriter, EpisodeRecord
from .rng import SplitMix64, derive_seed
from .social import describe, to_goals
from .world import (
    Action,
    BODY_BLOCK,
    EpisodeOver,
    LAYOUT_VERSION,
    N_OBJECTS,
    OBJECT_BLOCK,
    OBJECT_TYPES,
    OBS_LENGTH,
    observation_of,
    scene_to_dict,
    step,
)

PROTOCOL_VERSION = "playpen/1"

COMMANDS = (
    "hello", "reset", "step", "describe", "goals", "imagine",
    "sample_goal", "reward_eval", "close",
)


class BindFailure(OSError):
    """Server could not bind its address."""


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def layout_descriptor() -> dict:
    return {
        "version": LAYOUT_VERSION,
        "observation_length": OBS_LENGTH,
        "body_block": BODY_BLOCK,
        "object_block": OBJECT_BLOCK,
        "n_objects": N_OBJECTS,
        "object_types": list(OBJECT_TYPES),
    }


class Session:
    """One client's environment: a single active episode plus goal state."""

    _split = None

    def __init__(self, session_id: int, config: RunConfig, log: "SharedLog | None" = None):
        self.id = session_id
        self.config = config
        self.log = log
        self.rng = SplitMix64(derive_seed(config.seed, f"session-{session_id}"))
        if Session._split is None:
            Session._split = grammar.split_train_test()
        self.episodes_started = 0
        self.goal: str | None = None
        self.seed: int | None = None
        self.initial = None
        self.state = None
        self.actions: list = []
        self.obs_log: list = []
        self._samples = 0
        self.imagination = imagination.ImaginationState(variant=config.imagination_variant)

    # --- helpers -----------------------------------------------------------
    def _require_episode(self):
        if self.state is None:
            raise ProtocolError("BadRequest", "no active episode; send reset first")

    @property
    def done(self) -> bool:
        return self.state is not None and self.state.step_index >= self.state.episode_length

    def _observation(self) -> list:
        return observation_of(self.state, self.initial)

    # --- commands ------------------------------------------------------------
    def handle(self, message: dict) -> dict:
        if not isinstance(message, dict) or "cmd" not in message:
            raise ProtocolError("BadRequest", "message must carry a cmd field")
        cmd = message["cmd"]
        if cmd not in COMMANDS:
            raise ProtocolError("BadRequest", f"unknown command {cmd!r}")
        return getattr(self, f"_cmd_{cmd}")(message)

    def _cmd_hello(self, message: dict) -> dict:
        return {"protocol": PROTOCOL_VERSION, "layout": layout_descriptor()}

    def _cmd_reset(self, message: dict) -> dict:
        goal = message.get("goal")
        if not isinstance(goal, str) or not goal:
            raise ProtocolError("BadRequest", "reset needs a goal sentence")
        seed = message.get("seed")
        if seed is None:
            seed = self.rng.next_u64() >> 1
        elif not isinstance(seed, int) or isinstance(seed, bool):
            raise ProtocolError("BadRequest", "seed must be an integer")
        self.goal = goal
        self.seed = int(seed)
        self.initial = setup_episode(goal, self.seed, self.config.episode_length)
        self.state = self.initial
        self.actions = []
        self.obs_log = []
        self.episodes_started += 1
        return {"obs": self._observation(), "scene_id": self.episodes_started - 1, "goal": goal}

    def _cmd_step(self, message: dict) -> dict:
        self._require_episode()
        action = message.get("action")
        if not isinstance(action, (list, tuple)) or len(action) != 3:
            raise ProtocolError("BadRequest", "action must be a list of three numbers")
        try:
            components = [float(v) for v in action]
        except (TypeError, ValueError) as exc:
            raise ProtocolError("BadRequest", "action components must be numbers") from exc
        if not all(math.isfinite(v) for v in components):
            raise ProtocolError("BadRequest", "action components must be finite")
        try:
            self.state = step(self.state, Action(*components))
        except EpisodeOver as exc:
            raise ProtocolError("EpisodeOver", str(exc)) from exc
        obs = self._observation()
        self.actions.append([float(v) for v in action])
        self.obs_log.append(obs)
        if self.done and self.log is not None:
            self._write_episode()
        return {"obs": obs, "done": self.done, "step": self.state.step_index}

    def _cmd_describe(self, message: dict) -> dict:
        self._require_episode()
        if not self.done:
            raise ProtocolError("BadRequest", "episode not finished; descriptions are end-of-episode")
        feedback = describe(
            self.state, self.config.sp, self.rng.spawn(f"sp-{self.episodes_started}"),
            episode_index=self.episodes_started - 1,
        )
        for goal in sorted(to_goals(feedback.positives)):
            imagination.update_equivalences(self.imagination, goal)
        return {
            "descriptions": list(feedback.positives),
            "negatives": list(feedback.negatives),
            "present": feedback.present,
        }

    def _cmd_goals(self, message: dict) -> dict:
        split = message.get("split", "all")
        if split == "train":
            goals = Session._split.train
        elif split == "test":
            goals = Session._split.test
        elif split == "all":
            goals = Session._split.train + Session._split.test
        else:
            raise ProtocolError("BadRequest", f"unknown split {split!r}")
        return {"goals": sorted(goals)}

    def _cmd_imagine(self, message: dict) -> dict:
        base = imagination.imagine(self.imagination)
        out = imagination.apply_variant(
            base, self.config.imagination_variant,
            self.rng.spawn(f"imagine-{self.episodes_started}"),
            Session._split.test, self.imagination.known,
        )
        return {"imagined": sorted(out)}

    def _cmd_sample_goal(self, message: dict) -> dict:
        enabled = (
            self.config.imagination_enabled_from is not None
            and self.episodes_started >= self.config.imagination_enabled_from
        )
        imagined = []
        if enabled:
            imagined = sorted(
                imagination.apply_variant(
                    imagination.imagine(self.imagination),
                    self.config.imagination_variant,
                    self.rng.spawn(f"variant-{self.episodes_started}"),
                    Session._split.test, self.imagination.known,
                )
            )
        self._samples += 1
        try:
            goal = imagination.sample_target(
                list(self.imagination.known), imagined, enabled,
                self.rng.spawn(f"target-{self._samples}"),
            )
        except imagination.NoGoalsKnown as exc:
            raise ProtocolError("NoGoalsKnown", str(exc)) from exc
        return {"goal": goal}

    def _cmd_reward_eval(self, message: dict) -> dict:
        self._require_episode()
        goal = message.get("goal")
        if not isinstance(goal, str):
            raise ProtocolError("BadRequest", "reward_eval needs a goal sentence")
        try:
            value = grammar.holds(goal, self.state)
        except grammar.NotInGrammar as exc:
            raise ProtocolError("NotInGrammar", str(exc)) from exc
        return {"holds": value}

    def _cmd_close(self, message: dict) -> dict:
        return {"bye": True}

    def _write_episode(self) -> None:
        # same sub-stream as the describe command, so the logged feedback is
        # exactly what a describe request for this episode returns
        feedback = describe(
            self.state, self.config.sp, self.rng.spawn(f"sp-{self.episodes_started}"),
            episode_index=self.episodes_started - 1,
        )
        record = EpisodeRecord(
            episode_id=self.log.next_episode_id(),
            goal=self.goal,
            seed=self.seed,
            scene=scene_to_dict(self.initial),
            steps=list(zip(self.actions, self.obs_log)),
            achieved=self._achieved(),
            descriptions=list(feedback.positives),
            negatives=list(feedback.negatives),
        )
        self.log.append(record)

    def _achieved(self) -> bool:
        try:
            return grammar.holds(self.goal, self.state)
        except grammar.NotInGrammar:
            return False


class SharedLog:
    """Episode log shared across sessions; appends are serialized."""

    def __init__(self, path: str, config: RunConfig):
        self._writer = EpisodeLogWriter(path, config.to_dict())
        self._lock = threading.Lock()
        self._next_id = 0

    def next_episode_id(self) -> int:
        with self._lock:
            episode_id = self._next_id
            self._next_id += 1
            return episode_id

    def append(self, record: EpisodeRecord) -> None:
        with self._lock:
            self._writer.append(record)

    def close(self) -> None:
        self._writer.close()


def _error_payload(request_id, code: str, message: str) -> dict:
    return {"id": request_id, "ok": False, "error": {"code": code, "message": message}}


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: PlaypenServer = self.server
        session = Session(server.next_session_id(), server.config, server.log)
        for raw in self.rfile:
            raw = raw.strip()
            if not raw:
                continue
            request_id = None
            try:
                message = json.loads(raw.decode("utf-8"))
                if isinstance(message, dict):
                    request_id = message.get("id")
                reply = session.handle(message)
                payload = {"id": request_id, "ok": True, **reply}
            except ProtocolError as exc:
                payload = _error_payload(request_id, exc.code, exc.message)
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                payload = _error_payload(None, "BadRequest", f"malformed JSON: {exc}")
            except Exception as exc:  # pragma: no cover - defensive
                payload = _error_payload(request_id, "InternalError", str(exc))
            self.wfile.write((json.dumps(payload) + "\n").encode("utf-8"))
            self.wfile.flush()
            if isinstance(payload, dict) and payload.get("bye"):
                break


class PlaypenServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, config: RunConfig, host: str = "127.0.0.1", port: int | None = None):
        self.config = config
        self.log = SharedLog(config.log_path, config) if config.log_path else None
        self._session_counter = 0
        self._counter_lock = threading.Lock()
        try:
            super().__init__((host, port if port is not None else config.port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port or config.port}: {exc}") from exc

    def next_session_id(self) -> int:
        with self._counter_lock:
            self._session_counter += 1
            return self._session_counter - 1

    def close(self) -> None:
        self.server_close()
        if self.log is not None:
            self.log.close()


def serve(config: RunConfig, host: str = "127.0.0.1", port: int | None = None) -> None:
    """Run the server until interrupted."""
    server = PlaypenServer(config, host=host, port=port)
    try:
        server.serve_forever()
    finally:
        server.close()
