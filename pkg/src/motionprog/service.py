"""Local HTTP service for interactive program editing.

Sessions are held in memory.  Each session serializes its mutations under a
lock while readers work on immutable snapshots, so concurrent reads see
either the pre- or post-edit program, never a mixture.  All randomized
endpoints accept an explicit seed; otherwise one is derived from the session
id and edit counter and reported back.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import uuid
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np

from .abstractor import (
    AbstractProgram,
    ForLoop,
    LoopConfig,
    abstract_to_obj,
    default_tau,
    detect_loops,
    execute_abstract,
    roll_loops,
    serialize_abstract,
    to_abstract,
)
from .apps import interpolate_poses
from .errors import MotionProgError, ParseError, StructuralError
from .pose import POSE_JSON, PoseSequence, parse_keypoints, serialize_pose
from .segmenter import (
    ConcreteProgram,
    SegmentationConfig,
    program_to_obj,
    segment,
    serialize_program,
)


def derive_seed(session_id: str, edit_count: int) -> int:
    digest = hashlib.sha256(f"{session_id}:{edit_count}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass(frozen=True)
class SessionSnapshot:
    id: str
    source: PoseSequence
    concrete: ConcreteProgram
    abstract: AbstractProgram
    edit_count: int
    last_seed: int | None  # seed of the execution that produced `concrete`
    history: tuple[dict, ...]


class Session:
    def __init__(self, snapshot: SessionSnapshot):
        self.lock = threading.Lock()
        self.snapshot = snapshot  # reference swap is atomic under the GIL


class SessionStore:
    def __init__(self, persist: str | None = None):
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self.persist = persist
        if persist:
            os.makedirs(persist, exist_ok=True)

    def create(self, snapshot: SessionSnapshot) -> Session:
        session = Session(snapshot)
        with self._lock:
            self._sessions[snapshot.id] = session
        self._persist(snapshot)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            return self._sessions[session_id]

    def delete(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            del self._sessions[session_id]

    def update(self, session: Session, snapshot: SessionSnapshot) -> None:
        session.snapshot = snapshot
        self._persist(snapshot)

    def _persist(self, snapshot: SessionSnapshot) -> None:
        if not self.persist:
            return
        base = os.path.join(self.persist, snapshot.id)
        with open(base + ".concrete.json", "w", encoding="utf-8") as fh:
            fh.write(serialize_program(snapshot.concrete))
        with open(base + ".abstract.json", "w", encoding="utf-8") as fh:
            fh.write(serialize_abstract(snapshot.abstract))


def _float_param(params, name, default):
    return float(params[name][0]) if name in params else default


def _int_param(params, name, default):
    return int(params[name][0]) if name in params else default


def synthesize(seq: PoseSequence, params: dict) -> tuple[ConcreteProgram, AbstractProgram]:
    seg_cfg = SegmentationConfig(
        lambda_coeff=_float_param(params, "lambda_coeff", 0.1),
        lambda_window=_int_param(params, "lambda_window", 31),
        min_segment=_int_param(params, "min_segment", 2),
        max_segment=_int_param(params, "max_segment", None) if "max_segment" in params else None,
    )
    tau = _float_param(params, "tau", default_tau(seq.width, seq.height))
    loop_cfg = LoopConfig(
        max_body=_int_param(params, "max_body", 4),
        init_window=_int_param(params, "init_window", None) if "init_window" in params else None,
        quality_threshold=tau,
        min_iterations=_int_param(params, "min_iters", 2),
    )
    concrete = segment(seq, seg_cfg)
    prims = to_abstract(concrete)
    candidates = detect_loops(prims, loop_cfg)
    abstract = roll_loops(prims, candidates, joints=concrete.joints)
    return concrete, abstract


def _loop_positions(program: AbstractProgram) -> list[int]:
    return [i for i, s in enumerate(program.statements) if isinstance(s, ForLoop)]


def validate_snapshot(snapshot: SessionSnapshot) -> dict:
    checks = []

    b = snapshot.concrete.boundaries
    checks.append({
        "name": "boundaries_monotone",
        "ok": b[0] == 0 and all(x < y for x, y in zip(b, b[1:])),
        "detail": f"{len(b)} boundaries, {b[-1]} frames",
    })

    spans = tuple(y - x for x, y in zip(b, b[1:]))
    times_ok = all(tuple(p.time for p in prims) == spans
                   for prims in snapshot.concrete.tracks.values())
    checks.append({"name": "track_times_match_boundaries", "ok": times_ok,
                   "detail": f"{len(spans)} segments"})

    loops = [s for s in snapshot.abstract.statements if isinstance(s, ForLoop)]
    loops_ok = all(s.iterations >= 1 and len(s.body) >= 1 for s in loops)
    checks.append({"name": "loop_arithmetic", "ok": loops_ok,
                   "detail": f"{len(loops)} loops"})

    if snapshot.last_seed is None:
        # Unedited session: the abstract program must account for every
        # concrete segment (loop rollup conserves primitive count).
        total = sum(1 if not isinstance(s, ForLoop) else s.iterations * len(s.body)
                    for s in snapshot.abstract.statements)
        checks.append({
            "name": "abstract_covers_concrete",
            "ok": total == snapshot.concrete.n_segments,
            "detail": f"{total} abstract primitives vs "
                      f"{snapshot.concrete.n_segments} segments",
        })
    else:
        redone = execute_abstract(
            snapshot.abstract, np.random.default_rng(snapshot.last_seed),
            fps=snapshot.source.fps, width=snapshot.source.width,
            height=snapshot.source.height)
        checks.append({
            "name": "concrete_reproducible_from_seed",
            "ok": serialize_program(redone) == serialize_program(snapshot.concrete),
            "detail": f"seed {snapshot.last_seed}",
        })

    return {"ok": all(c["ok"] for c in checks), "checks": checks}


class _Handler(BaseHTTPRequestHandler):
    store: SessionStore = None  # set by make_server
    protocol_version = "HTTP/1.1"

    # --- plumbing ---

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, code: int, obj, extra_headers=None):
        body = json.dumps(obj, separators=(",", ":")).encode()
        self._send_bytes(code, body, "application/json", extra_headers)

    def _send_text_json(self, code: int, text: str, extra_headers=None):
        self._send_bytes(code, text.encode(), "application/json", extra_headers)

    def _send_bytes(self, code: int, body: bytes, ctype: str, extra_headers=None):
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        for k, v in (extra_headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, code: int, message: str):
        self._send_json(code, {"error": message})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _dispatch(self, method: str):
        url = urlparse(self.path)
        params = parse_qs(url.query)
        try:
            handled = self._route(method, url.path, params)
        except KeyError as e:
            self._send_error_json(404, f"not found: {e}")
            return
        except (ParseError, StructuralError, ValueError) as e:
            self._send_error_json(400, str(e))
            return
        except MotionProgError as e:
            self._send_error_json(400, str(e))
            return
        except Exception as e:  # session state is only swapped on success
            self._send_error_json(500, f"internal error: {e}")
            return
        if not handled:
            self._send_error_json(404, f"no route for {method} {url.path}")

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PATCH(self):
        self._dispatch("PATCH")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def do_OPTIONS(self):
        self._send_bytes(204, b"", "text/plain", {
            "Access-Control-Allow-Methods": "GET, POST, PATCH, DELETE, OPTIONS",
            "Access-Control-Allow-Headers": "Content-Type",
        })

    # --- routes ---

    def _route(self, method: str, path: str, params) -> bool:
        if path == "/sessions" and method == "POST":
            self._create_session(params)
            return True

        m = re.fullmatch(r"/sessions/([^/]+)", path)
        if m and method == "DELETE":
            self.store.delete(m.group(1))
            self._send_bytes(204, b"", "application/json")
            return True

        m = re.fullmatch(r"/sessions/([^/]+)/program", path)
        if m and method == "GET":
            self._get_program(m.group(1), params)
            return True

        m = re.fullmatch(r"/sessions/([^/]+)/loops/(\d+)", path)
        if m and method == "PATCH":
            self._patch_loop(m.group(1), int(m.group(2)))
            return True

        m = re.fullmatch(r"/sessions/([^/]+)/execute", path)
        if m and method in ("POST", "GET"):
            self._execute(m.group(1), params)
            return True

        m = re.fullmatch(r"/sessions/([^/]+)/validate", path)
        if m and method == "GET":
            snapshot = self.store.get(m.group(1)).snapshot
            self._send_json(200, validate_snapshot(snapshot))
            return True

        return False

    def _create_session(self, params):
        seq = parse_keypoints(self._read_body(), POSE_JSON)
        concrete, abstract = synthesize(seq, params)
        session_id = uuid.uuid4().hex
        snapshot = SessionSnapshot(session_id, seq, concrete, abstract,
                                   edit_count=0, last_seed=None, history=())
        self.store.create(snapshot)
        body = (
            '{"id":"' + session_id + '"'
            ',"concrete":' + serialize_program(concrete) +
            ',"abstract":' + serialize_abstract(abstract) + "}"
        )
        self._send_text_json(201, body)

    def _get_program(self, session_id: str, params):
        snapshot = self.store.get(session_id).snapshot
        level = params.get("level", ["concrete"])[0]
        if level == "concrete":
            self._send_text_json(200, serialize_program(snapshot.concrete))
        elif level == "abstract":
            self._send_text_json(200, serialize_abstract(snapshot.abstract))
        else:
            raise ValueError(f"unknown level: {level!r}")

    def _patch_loop(self, session_id: str, loop_index: int):
        body = json.loads(self._read_body() or b"{}")
        if "iter" not in body:
            raise ValueError("body must carry {'iter': n}")
        new_iter = body["iter"]
        if not isinstance(new_iter, int) or new_iter < 1:
            raise ValueError("iter must be a positive integer")

        session = self.store.get(session_id)
        with session.lock:
            snapshot = session.snapshot
            positions = _loop_positions(snapshot.abstract)
            if loop_index >= len(positions):
                raise KeyError(f"loop {loop_index}")
            pos = positions[loop_index]
            old_loop = snapshot.abstract.statements[pos]
            statements = list(snapshot.abstract.statements)
            statements[pos] = ForLoop(new_iter, old_loop.body)
            abstract = AbstractProgram(snapshot.abstract.joints, tuple(statements))

            edit_count = snapshot.edit_count + 1
            seed = body.get("seed")
            if seed is None:
                seed = derive_seed(session_id, edit_count)
            concrete = execute_abstract(
                abstract, np.random.default_rng(seed),
                fps=snapshot.source.fps, width=snapshot.source.width,
                height=snapshot.source.height)
            record = {"edit": edit_count, "loop": loop_index,
                      "old_iter": old_loop.iterations, "new_iter": new_iter,
                      "seed": seed}
            new_snapshot = replace(snapshot, concrete=concrete, abstract=abstract,
                                   edit_count=edit_count, last_seed=seed,
                                   history=snapshot.history + (record,))
            self.store.update(session, new_snapshot)
        body_text = (
            '{"id":"' + session_id + '","seed":' + str(seed) +
            ',"concrete":' + serialize_program(concrete) +
            ',"abstract":' + serialize_abstract(abstract) + "}"
        )
        self._send_text_json(200, body_text)

    def _execute(self, session_id: str, params):
        # level=concrete (default): deterministic execution of the session's
        # canonical program, so frame counts always match its boundaries.
        # level=abstract: fresh sampling of the loops with a reproducible
        # seed (derived from session id + edit counter when absent).
        snapshot = self.store.get(session_id).snapshot
        body = {}
        if self.command == "POST":
            raw = self._read_body()
            if raw:
                body = json.loads(raw)
        factor = int(body.get("factor", _int_param(params, "factor", 1)))
        level = body.get("level", params.get("level", ["concrete"])[0]
                         if "level" in params else "concrete")
        if level == "concrete":
            poses = interpolate_poses(snapshot.concrete, factor)
            self._send_text_json(200, serialize_pose(poses, POSE_JSON))
            return
        if level != "abstract":
            raise ValueError(f"unknown level: {level!r}")
        seed = body.get("seed", None)
        if seed is None and "seed" in params:
            seed = _int_param(params, "seed", None)
        if seed is None:
            seed = derive_seed(session_id, snapshot.edit_count)
        concrete = execute_abstract(
            snapshot.abstract, np.random.default_rng(int(seed)),
            fps=snapshot.source.fps, width=snapshot.source.width,
            height=snapshot.source.height)
        poses = interpolate_poses(concrete, factor)
        self._send_text_json(200, serialize_pose(poses, POSE_JSON),
                             {"X-Seed": str(seed)})


def make_server(host: str = "127.0.0.1", port: int = 0,
                persist: str | None = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"store": SessionStore(persist)})
    server = ThreadingHTTPServer((host, port), handler)
    return server


def run_server(host: str = "127.0.0.1", port: int = 8707,
               persist: str | None = None) -> None:
    server = make_server(host, port, persist)
    print(f"serving on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
