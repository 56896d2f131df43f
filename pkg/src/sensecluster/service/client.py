"""In-process HTTP client for the service app.

Lets the CLI (and tests) drive the FastAPI app through real request/response
cycles without opening a socket: a sync httpx transport that runs the ASGI
app per request.
"""

from __future__ import annotations

import asyncio

import httpx


class InProcessTransport(httpx.BaseTransport):
    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        request.read()  # materialize the body for the async transport

        async def call() -> httpx.Response:
            response = await self._asgi.handle_async_request(request)
            body = await response.aread()
            await response.aclose()
            return httpx.Response(
                response.status_code, headers=response.headers, content=body
            )

        return asyncio.run(call())


def in_process_client(app=None) -> httpx.Client:
    if app is None:
        from .app import create_app

        app = create_app()
    return httpx.Client(
        transport=InProcessTransport(app), base_url="http://engine", timeout=600.0
    )
