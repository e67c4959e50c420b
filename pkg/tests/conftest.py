import json
import sys
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"
SAMPLE = json.loads((DATA / "api_sample.json").read_text())


class FakeApi(BaseHTTPRequestHandler):
    """Re-paginates the recorded sample; ``fail`` holds status codes to return first."""

    fail: list = []
    requests: list = []
    body_override = None

    def do_GET(self):
        type(self).requests.append(self.path)
        if type(self).fail:
            self.send_response(type(self).fail.pop(0))
            self.end_headers()
            return
        if type(self).body_override is not None:
            body = type(self).body_override
        else:
            q = urllib.parse.parse_qs(urllib.parse.urlparse(self.path).query)
            per_page = int(q["per_page"][0])
            page = int(q.get("page", ["1"])[0])
            obs = SAMPLE[1]
            pages = max(1, -(-len(obs) // per_page))
            env = dict(SAMPLE[0], page=page, pages=pages, per_page=per_page)
            body = json.dumps([env, obs[(page - 1) * per_page: page * per_page]]).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def api():
    FakeApi.fail = []
    FakeApi.requests = []
    FakeApi.body_override = None
    server = ThreadingHTTPServer(("127.0.0.1", 0), FakeApi)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v2"
    server.shutdown()




# -- acceptance reporting -------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


class Criterion:
    """Context manager recording one PASS/FAIL/SKIP line per acceptance criterion."""

    def __init__(self, label: str):
        self.label = label
        self.details: list[str] = []

    def note(self, text: str) -> None:
        self.details.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        detail = "; ".join(self.details)
        if exc_type is None:
            status = "PASS"
        elif exc_type is pytest.skip.Exception:
            status = "SKIP"
            detail = detail or str(exc)
        else:
            status = "FAIL"
            detail = f"{detail}; {exc_type.__name__}: {exc}".strip("; ")
        line = f"[{status}] {self.label}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return False


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
