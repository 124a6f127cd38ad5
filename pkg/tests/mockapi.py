"""A local stand-in for the explorer's proxy endpoint."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse


class MockApi:
    def __init__(self, codes=None, fail_first=0, fail_status=503, rate_limit_first=0):
        self.codes = dict(codes or {})
        self.fail_first = fail_first
        self.fail_status = fail_status
        self.rate_limit_first = rate_limit_first
        self.arrivals = []
        self.queries = []
        self._lock = threading.Lock()
        api = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                with api._lock:
                    api.arrivals.append(time.monotonic())
                    q = {k: v[0] for k, v in parse_qs(urlparse(self.path).query).items()}
                    api.queries.append(q)
                    n = len(api.arrivals)
                if n <= api.fail_first:
                    self._send(api.fail_status, {"error": "busy"})
                elif n <= api.fail_first + api.rate_limit_first:
                    self._send(200, {"status": "0", "message": "NOTOK", "result": "Max rate limit reached"})
                else:
                    addr = q.get("address", "")
                    self._send(200, {"jsonrpc": "2.0", "id": 1, "result": api.codes.get(addr, "0x")})

            def _send(self, status, body):
                data = json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/api"
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
