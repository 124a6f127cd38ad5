"""Deployed bytecode from an Etherscan-compatible JSON API.

Uses the ``proxy`` module's ``eth_getCode`` action. The API key is read from
an environment variable and is scrubbed from every log record and error
message this module (or the HTTP stack beneath it) produces.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import requests

from .disasm import Bytecode, MalformedInputError, decode_hex

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.etherscan.io/api"
DEFAULT_KEY_ENV = "ETHERSCAN_API_KEY"
_ADDRESS_RE = re.compile(r"^(0x)?[0-9a-fA-F]{40}$")
_TRANSIENT_STATUS = {429, 500, 502, 503, 504}


class AddressError(ValueError):
    pass


class FetchError(RuntimeError):
    pass


class EmptyCode(Bytecode):
    """Result for an address with no code (an externally owned account)."""


@dataclass(frozen=True)
class FetchConfig:
    base_url: str = DEFAULT_BASE_URL
    api_key: str = field(default="", repr=False)
    rate_limit: float = 5.0
    timeout: float = 10.0
    attempts: int = 3
    backoff: float = 0.5

    def __post_init__(self):
        if self.rate_limit <= 0:
            raise ValueError("rate_limit must be positive")
        if self.attempts < 1:
            raise ValueError("attempts must be at least 1")

    @classmethod
    def from_env(cls, env_var: str = DEFAULT_KEY_ENV, **kw) -> "FetchConfig":
        return cls(api_key=os.environ.get(env_var, ""), **kw)


class RateLimiter:
    """At most ``rate`` acquisitions in any window of one second.

    Sliding-window log: with capacity ``floor(rate)`` (at least 1) and a window
    of ``capacity / rate`` seconds, no 1-second interval can hold more than
    ``rate`` acquisitions. ``slack`` widens the window a little so network
    jitter cannot push two bursts into one second on the server. Thread-safe,
    so one limiter can pace a pool of workers.
    """

    def __init__(
        self,
        rate: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        slack: float = 0.02,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.capacity = max(1, int(rate))
        self.window = self.capacity / rate + slack
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        with self._lock:
            while True:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= self.window:
                    self._stamps.popleft()
                if len(self._stamps) < self.capacity:
                    self._stamps.append(now)
                    return now
                self._sleep(self.window - (now - self._stamps[0]))


class _Redactor(logging.Filter):
    def __init__(self, secret: str):
        super().__init__()
        self.secret = secret

    def filter(self, record: logging.LogRecord) -> bool:
        if self.secret:
            msg = record.getMessage()
            if self.secret in msg:
                record.msg = msg.replace(self.secret, "***")
                record.args = None
        return True


def validate_address(address: str) -> str:
    a = address.strip()
    if not _ADDRESS_RE.match(a):
        raise AddressError(f"not a 20-byte hex address: {address!r}")
    return "0x" + a[-40:].lower()


class BytecodeFetcher:
    def __init__(self, config: FetchConfig, session: Optional[requests.Session] = None,
                 limiter: Optional[RateLimiter] = None, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.session = session or requests.Session()
        self.limiter = limiter or RateLimiter(config.rate_limit)
        self._sleep = sleep
        self._redactor = _Redactor(config.api_key)
        for name in ("urllib3", "urllib3.connectionpool", "requests", __name__):
            lg = logging.getLogger(name)
            if not any(isinstance(f, _Redactor) and f.secret == config.api_key for f in lg.filters):
                lg.addFilter(self._redactor)

    def close(self):
        for name in ("urllib3", "urllib3.connectionpool", "requests", __name__):
            logging.getLogger(name).removeFilter(self._redactor)
        self.session.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _scrub(self, text: str) -> str:
        key = self.config.api_key
        return text.replace(key, "***") if key else text

    def _request(self, params: dict) -> dict:
        params = dict(params)
        if self.config.api_key:
            params["apikey"] = self.config.api_key
        last = "no attempt made"
        for attempt in range(1, self.config.attempts + 1):
            self.limiter.acquire()
            try:
                resp = self.session.get(self.config.base_url, params=params, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last = self._scrub(f"{type(exc).__name__}: {exc}")
            else:
                if resp.status_code in _TRANSIENT_STATUS:
                    last = f"HTTP {resp.status_code}"
                elif resp.status_code != 200:
                    raise FetchError(f"HTTP {resp.status_code}: {self._scrub(resp.text[:200])}")
                else:
                    try:
                        body = resp.json()
                    except ValueError:
                        raise FetchError("response is not JSON") from None
                    msg = str(body.get("result", "")) if isinstance(body, dict) else ""
                    if isinstance(body, dict) and body.get("status") == "0" and "rate limit" in msg.lower():
                        last = self._scrub(msg)
                    else:
                        return body
            if attempt < self.config.attempts:
                delay = self.config.backoff * 2 ** (attempt - 1)
                log.info("transient failure (%s); retry %d in %.2fs", last, attempt, delay)
                self._sleep(delay)
        raise FetchError(f"giving up after {self.config.attempts} attempts: {last}")

    def fetch_bytecode(self, address: str) -> Bytecode:
        addr = validate_address(address)
        body = self._request({"module": "proxy", "action": "eth_getCode", "address": addr, "tag": "latest"})
        if not isinstance(body, dict):
            raise FetchError("unexpected response shape")
        if "error" in body:
            err = body["error"]
            detail = err.get("message", err) if isinstance(err, dict) else err
            raise FetchError(self._scrub(f"API error: {detail}"))
        if body.get("status") == "0":
            raise FetchError(self._scrub(f"API error: {body.get('message', '')}: {body.get('result', '')}"))
        result = body.get("result")
        if not isinstance(result, str):
            raise FetchError("response has no result string")
        try:
            code = decode_hex(result)
        except MalformedInputError as exc:
            raise FetchError(f"API returned malformed hex: {exc}") from None
        if not code:
            return EmptyCode(b"", addr)
        log.debug("fetched %d bytes for %s", len(code), addr)
        return Bytecode(code, addr)


def fetch_bytecode(config: FetchConfig, address: str) -> Bytecode:
    with BytecodeFetcher(config) as f:
        return f.fetch_bytecode(address)
