"""HTTP session API for live oversight: question/answer plus event stream.

Endpoints:
  GET  /session         current question, candidates, world snapshot, metrics
  POST /session/answer  {"answer": "yes" | "no" | free text}
  GET  /events          server-sent events with session view updates

The run executes on a worker thread; handlers talk to it through a
SessionHub.  All run state lives server-side, so a console can disconnect
and reload at any time without affecting the run.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .pipeline import OversightQuestion, UserModel


class HubUser(UserModel):
    """User model that forwards questions to the hub and blocks for answers."""

    def __init__(self, hub: "SessionHub") -> None:
        self.hub = hub
        self.current_object: str | None = None

    def confirm(self, question: OversightQuestion) -> str:
        return self.hub.ask(question)

    def describe(self, question: OversightQuestion) -> str:
        return self.hub.ask(question)


class SessionHub:
    """Thread-safe state shared between the run thread and HTTP handlers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._answers: queue.Queue[str] = queue.Queue()
        self._subscribers: list[queue.Queue] = []
        self._waiting = False
        self.question: OversightQuestion | None = None
        self.question_seq = 0
        self.current_object: str | None = None
        self.candidates: list[dict] = []
        self.world: dict = {}
        self.metrics: dict = {}
        self.status = "starting"
        self.report: dict | None = None

    def make_user(self) -> HubUser:
        return HubUser(self)

    # -- run-side hooks ------------------------------------------------------

    def on_object(self, object_id: str) -> None:
        with self._lock:
            self.current_object = object_id
        self._publish()

    def on_question(self, question: OversightQuestion | None, trace) -> None:
        with self._lock:
            self.question = question
            if question is not None:
                self.question_seq += 1
            seen = set()
            candidates = []
            for record in trace.retrieved:
                if record.candidate.text in seen:
                    continue
                seen.add(record.candidate.text)
                candidates.append(
                    {
                        "text": record.candidate.text,
                        "mean_probability": round(record.candidate.mean_probability, 5),
                        "viable": bool(record.report.viable) if record.report else None,
                        "mismatch": record.report.mismatch.render()
                        if record.report and record.report.mismatch
                        else None,
                    }
                )
            self.candidates = candidates
        self._publish()

    def update_state(self, world: dict, metrics: dict, status: str = "running") -> None:
        with self._lock:
            self.world = world
            self.metrics = metrics
            self.status = status
        self._publish()

    def on_finished(self, report) -> None:
        with self._lock:
            self.status = "done"
            self.report = report.to_dict()
            self.question = None
        self._publish()

    # -- user bridge -----------------------------------------------------------

    def ask(self, question: OversightQuestion) -> str:
        with self._lock:
            self._waiting = True
        self._publish()
        answer = self._answers.get()
        with self._lock:
            self._waiting = False
        return answer

    def submit_answer(self, answer: str) -> str | None:
        """Queue a user answer; returns an error message when nothing is pending."""
        if not isinstance(answer, str) or not answer.strip():
            return "answer must be a non-empty string"
        with self._lock:
            if not self._waiting or self.question is None:
                return "no question is pending"
            self._waiting = False  # one answer per question
        self._answers.put(answer)
        return None

    # -- views and events ------------------------------------------------------

    def view(self) -> dict:
        with self._lock:
            question = None
            if self.question is not None:
                question = {
                    "kind": self.question.kind,
                    "text": self.question.text,
                    "goal_text": self.question.goal_text,
                    "seq": self.question_seq,
                }
            return {
                "status": self.status,
                "current_object": self.current_object,
                "question": question,
                "candidates": list(self.candidates),
                "world": dict(self.world),
                "metrics": dict(self.metrics),
                "report": self.report,
            }

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        q.put(self.view())
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _publish(self) -> None:
        view = self.view()
        with self._lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            q.put(view)


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    console_dir: Path | None = None


def _make_handler(hub: SessionHub, config: ServerConfig):
    console_dir = config.console_dir

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet
            pass

        def _send_json(self, payload: dict, status: int = 200) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_file(self, path: Path) -> None:
            content_types = {
                ".html": "text/html; charset=utf-8",
                ".js": "text/javascript; charset=utf-8",
                ".css": "text/css; charset=utf-8",
                ".map": "application/json",
            }
            body = path.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", content_types.get(path.suffix, "application/octet-stream"))
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            if self.path == "/session":
                self._send_json(hub.view())
                return
            if self.path == "/events":
                self._serve_events()
                return
            if console_dir is not None:
                rel = "index.html" if self.path in ("/", "") else self.path.lstrip("/")
                candidate = (console_dir / rel).resolve()
                if candidate.is_file() and str(candidate).startswith(str(console_dir.resolve())):
                    self._send_file(candidate)
                    return
            self._send_json({"error": "not found"}, status=404)

        def do_POST(self) -> None:
            if self.path != "/session/answer":
                self._send_json({"error": "not found"}, status=404)
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
                answer = payload["answer"]
            except (ValueError, KeyError, json.JSONDecodeError):
                self._send_json({"error": "body must be JSON with an 'answer' field"}, status=400)
                return
            error = hub.submit_answer(answer)
            if error is not None:
                self._send_json({"error": error}, status=409)
                return
            self._send_json({"ok": True}, status=202)

        def _serve_events(self) -> None:
            q = hub.subscribe()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                while True:
                    try:
                        view = q.get(timeout=15.0)
                        data = json.dumps(view)
                    except queue.Empty:
                        data = ""
                    if data:
                        self.wfile.write(f"data: {data}\n\n".encode("utf-8"))
                    else:
                        self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                hub.unsubscribe(q)

    return Handler


class SessionServer:
    """Threaded HTTP server bound to one hub."""

    def __init__(self, hub: SessionHub, config: ServerConfig | None = None) -> None:
        self.hub = hub
        self.config = config or ServerConfig()
        self._httpd = ThreadingHTTPServer(
            (self.config.host, self.config.port), _make_handler(hub, self.config)
        )
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
