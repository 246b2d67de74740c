"""JSON-over-HTTP prediction service.

Each session owns one adaptive predictor.  Text sessions echo back, for
every byte typed, a greedy continuation computed on a scratch clone —
speculative bytes never touch the live model, which is what keeps
re-typing deterministic.  Rock-paper-scissors sessions predict the
human's next move from their move history alone and commit the counter
move *before* the human's move arrives, so the AI provably cannot peek.

Endpoints (bodies are UTF-8 JSON):

* ``POST /session`` ``{mode: "text"|"rps", corpora: [name, ...]}``
  → ``{id}``; the named corpora are files under the corpus directory
  (``CMX_CORPUS_DIR`` or the ``--corpus-dir`` flag) the fresh model
  trains on.
* ``POST /session/{id}/text`` ``{byte: "<one char>"}`` or
  ``{byte_b64: "<base64 of one byte>"}``, optional ``n`` —
  → ``{prediction, prediction_b64}``.
* ``POST /session/{id}/rps`` ``{move: "r"|"p"|"s"}``
  → ``{aiMove, score: {wins, losses, draws}}`` (wins are AI wins).
* ``GET /session/{id}`` → session summary (mode, corpora, score,
  bytes seen) so a client can resume after a refresh.
* ``GET /corpora`` → ``{corpora: [name, ...]}``.
* ``DELETE /session/{id}`` → ``{ok: true}``.

Sessions are evicted after 15 idle minutes (configurable).  Requests to
one session are serialized; distinct sessions proceed concurrently.
"""

from __future__ import annotations

import base64
import os
import secrets
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .config import Config
from .engine import Predictor

__all__ = ["DEFAULT_PORT", "build_app", "main"]

DEFAULT_PORT = 8371
DEFAULT_TTL = 15 * 60.0
PREDICT_DEFAULT = 40
PREDICT_CAP = 200

RPS_MOVES = "rps"
_BEATS = {"r": "p", "p": "s", "s": "r"}  # what beats the key

# Sessions hold full model state; a modest table keeps cloning cheap.
_SERVICE_CONFIG = Config(table_log2=18, seen_log2=14)


def _now() -> float:
    return time.monotonic()


@dataclass
class _Session:
    id: str
    mode: str
    corpora: list[str]
    predictor: Predictor
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_used: float = field(default_factory=_now)
    wins: int = 0
    losses: int = 0
    draws: int = 0
    committed_ai: str = "r"

    def score(self) -> dict[str, int]:
        return {"wins": self.wins, "losses": self.losses, "draws": self.draws}


class _CreateBody(BaseModel):
    mode: str
    corpora: list[str] = []


class _TextBody(BaseModel):
    byte: str | None = None
    byte_b64: str | None = None
    n: int | None = None


class _RpsBody(BaseModel):
    move: str


def _commit_ai_move(predictor: Predictor) -> str:
    """Counter of the predicted next opponent move.

    Reads a clone of the live state, so committing is side-effect free;
    the prediction conditions only on the opponent moves already fed.
    """
    dist = predictor.clone().byte_distribution()
    probs = [float(dist[ord(m)]) for m in RPS_MOVES]
    best = RPS_MOVES[int(np.argmax(probs))]
    return _BEATS[best]


def build_app(
    corpus_dir: str | None = None,
    config: Config | None = None,
    ttl: float = DEFAULT_TTL,
    predict_n: int = PREDICT_DEFAULT,
) -> FastAPI:
    """Assemble the service around its own session table."""
    cfg = config if config is not None else _SERVICE_CONFIG
    app = FastAPI(title="cmx prediction service")
    sessions: dict[str, _Session] = {}
    table_lock = threading.Lock()

    def corpus_path() -> str | None:
        return corpus_dir or os.environ.get("CMX_CORPUS_DIR")

    def list_corpora() -> list[str]:
        root = corpus_path()
        if not root or not os.path.isdir(root):
            return []
        return sorted(
            name
            for name in os.listdir(root)
            if os.path.isfile(os.path.join(root, name))
        )

    def evict_idle() -> None:
        cutoff = _now() - ttl
        with table_lock:
            for sid in [
                s for s, v in sessions.items() if v.last_used < cutoff
            ]:
                del sessions[sid]

    def get_session(sid: str) -> _Session:
        evict_idle()
        with table_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return sess

    @app.post("/session")
    def create_session(body: _CreateBody):
        if body.mode not in ("text", "rps"):
            raise HTTPException(
                status_code=400, detail="mode must be 'text' or 'rps'"
            )
        root = corpus_path()
        blobs = []
        for name in body.corpora:
            if not root:
                raise HTTPException(
                    status_code=404, detail="no corpus directory configured"
                )
            if os.path.basename(name) != name:
                raise HTTPException(
                    status_code=400, detail=f"bad corpus name {name!r}"
                )
            path = os.path.join(root, name)
            if not os.path.isfile(path):
                raise HTTPException(
                    status_code=404, detail=f"unknown corpus {name!r}"
                )
            with open(path, "rb") as fh:
                blobs.append(fh.read())
        evict_idle()
        predictor = Predictor(cfg)
        for blob in blobs:
            predictor.train(blob)
        sess = _Session(
            id=secrets.token_hex(16),
            mode=body.mode,
            corpora=list(body.corpora),
            predictor=predictor,
        )
        if sess.mode == "rps":
            sess.committed_ai = _commit_ai_move(predictor)
        with table_lock:
            sessions[sess.id] = sess
        return {"id": sess.id}

    @app.get("/corpora")
    def corpora():
        return {"corpora": list_corpora()}

    @app.get("/session/{sid}")
    def session_info(sid: str):
        sess = get_session(sid)
        with sess.lock:
            sess.last_used = _now()
            return {
                "id": sess.id,
                "mode": sess.mode,
                "corpora": sess.corpora,
                "score": sess.score(),
                "bytes": sess.predictor.bytes_processed,
            }

    @app.delete("/session/{sid}")
    def delete_session(sid: str):
        evict_idle()
        with table_lock:
            if sid not in sessions:
                raise HTTPException(status_code=404, detail="unknown session")
            del sessions[sid]
        return {"ok": True}

    @app.post("/session/{sid}/text")
    def feed_text(sid: str, body: _TextBody):
        sess = get_session(sid)
        if sess.mode != "text":
            raise HTTPException(
                status_code=400, detail="session is not in text mode"
            )
        if (body.byte is None) == (body.byte_b64 is None):
            raise HTTPException(
                status_code=400, detail="send exactly one of byte, byte_b64"
            )
        if body.byte is not None:
            if len(body.byte) != 1 or ord(body.byte) > 255:
                raise HTTPException(
                    status_code=400,
                    detail="byte must be a single latin-1 character",
                )
            value = ord(body.byte)
        else:
            try:
                raw = base64.b64decode(body.byte_b64, validate=True)
            except Exception:
                raise HTTPException(status_code=400, detail="bad base64")
            if len(raw) != 1:
                raise HTTPException(
                    status_code=400, detail="byte_b64 must encode one byte"
                )
            value = raw[0]
        n = predict_n if body.n is None else body.n
        if not 0 <= n <= PREDICT_CAP:
            raise HTTPException(
                status_code=400, detail=f"n must be in 0..{PREDICT_CAP}"
            )
        with sess.lock:
            sess.last_used = _now()
            sess.predictor.process_byte(value)
            text = sess.predictor.predict_next_chars(n) if n else ""
        return {
            "prediction": text,
            "prediction_b64": base64.b64encode(
                text.encode("latin-1")
            ).decode(),
        }

    @app.post("/session/{sid}/rps")
    def rps_move(sid: str, body: _RpsBody):
        sess = get_session(sid)
        if sess.mode != "rps":
            raise HTTPException(
                status_code=400, detail="session is not in rps mode"
            )
        move = body.move
        if move not in _BEATS:
            raise HTTPException(
                status_code=400, detail="move must be 'r', 'p' or 's'"
            )
        with sess.lock:
            sess.last_used = _now()
            ai = sess.committed_ai  # committed before this move existed
            if ai == move:
                sess.draws += 1
            elif _BEATS[move] == ai:
                sess.wins += 1
            else:
                sess.losses += 1
            sess.predictor.process_byte(ord(move))
            sess.committed_ai = _commit_ai_move(sess.predictor)
            return {"aiMove": ai, "score": sess.score()}

    return app


def main(
    port: int = DEFAULT_PORT, corpus_dir: str | None = None
) -> None:  # pragma: no cover - thin uvicorn wrapper
    import uvicorn

    uvicorn.run(build_app(corpus_dir=corpus_dir), host="127.0.0.1", port=port)
