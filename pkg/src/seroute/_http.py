"""Small JSON-over-HTTP helper shared by the remote provider clients."""

from __future__ import annotations

import time
from typing import Any

import httpx


def post_json(
    url: str,
    payload: dict[str, Any],
    *,
    timeout: float,
    retries: int,
    backoff: float = 0.05,
) -> Any:
    """POST a JSON payload and return the decoded JSON response.

    Transport errors, 5xx responses and undecodable bodies are retried up
    to `retries` extra attempts. 4xx responses are not retried: the request
    itself is wrong. The last underlying exception is re-raised once the
    attempts are exhausted; callers wrap it in their own error type.
    """
    last_error: Exception | None = None
    for attempt in range(retries + 1):
        try:
            response = httpx.post(url, json=payload, timeout=timeout)
            if response.status_code >= 500:
                last_error = httpx.HTTPStatusError(
                    f"server error {response.status_code} from {url}",
                    request=response.request,
                    response=response,
                )
            else:
                response.raise_for_status()
                return response.json()
        except httpx.HTTPStatusError:
            raise
        except (httpx.HTTPError, ValueError) as exc:
            last_error = exc
        if attempt < retries and backoff > 0:
            time.sleep(backoff)
    assert last_error is not None
    raise last_error
