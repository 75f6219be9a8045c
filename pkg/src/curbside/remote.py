"""Client for an OpenAI-compatible chat-completions endpoint serving a vision model.

The model is asked for a JSON object with ``entrances``, ``sign_readings`` and
``passes_used``. Anything that does not validate strictly is discarded and
surfaces as :class:`AnalyzerUnavailable`.
"""
from __future__ import annotations

import json
from typing import Any, List, Literal, Optional, Sequence, Tuple

import httpx
from pydantic import BaseModel, ConfigDict, Field

from .entrances import AnalyzerReport, AnalyzerUnavailable, SignReading
from .geo import project_to_local, unproject
from .scene import Entrance, Scene

SYSTEM_PROMPT = (
    "You inspect satellite and street-level imagery of a delivery destination. "
    "Reply with a single JSON object and nothing else, with keys: "
    '"entrances" (list of {"id", "position": [lat, lon], "kind": front|side|rear|loading, '
    '"confidence": (0,1]}), "sign_readings" (list of {"rule_id", "legible": bool, '
    '"confidence": (0,1] that stopping is legal}), "passes_used" (int).'
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class EntranceSchema(_Strict):
    id: str
    position: List[float] = Field(min_length=2, max_length=2)
    kind: Literal["front", "side", "rear", "loading"]
    confidence: float = Field(gt=0, le=1)


class SignReadingSchema(_Strict):
    rule_id: str
    legible: bool
    confidence: float = Field(gt=0, le=1)


class ReportSchema(_Strict):
    entrances: List[EntranceSchema]
    sign_readings: List[SignReadingSchema]
    passes_used: int = Field(ge=0)


def report_from_dict(data: Any, origin: Tuple[float, float]) -> AnalyzerReport:
    """Strictly validate a decoded report; any deviation raises AnalyzerUnavailable."""
    try:
        parsed = ReportSchema.model_validate(data)
        entrances = tuple(
            Entrance(e.id, project_to_local(e.position[0], e.position[1], *origin), e.kind,
                     e.confidence, "vlm")
            for e in parsed.entrances
        )
    except ValueError as exc:  # pydantic.ValidationError subclasses ValueError
        raise AnalyzerUnavailable(f"malformed analyzer report: {exc}") from None
    readings = tuple(SignReading(r.rule_id, r.legible, r.confidence) for r in parsed.sign_readings)
    return AnalyzerReport(entrances, readings, parsed.passes_used)


class RemoteAnalyzer:
    """Blocking analyzer backed by a chat-completions HTTP endpoint."""

    def __init__(self, endpoint: str, model: str, api_key: Optional[str] = None,
                 timeout: float = 10.0, image_urls: Sequence[str] = (),
                 transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.image_urls = list(image_urls)
        self._transport = transport

    def build_request(self, scene: Scene) -> dict:
        lat, lon = unproject(scene.destination, scene.origin_lat, scene.origin_lon)
        rule_ids = [r.id for r in scene.rules if r.source == "vlm"]
        text = (
            f"Destination at [{lat}, {lon}]. Identify the building entrances and read "
            f"the parking signs for rules {rule_ids}."
        )
        content = [{"type": "text", "text": text}]
        content += [{"type": "image_url", "image_url": {"url": u}} for u in self.image_urls]
        return {
            "model": self.model,
            "temperature": 0,
            "response_format": {"type": "json_object"},
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": content},
            ],
        }

    def __call__(self, scene: Scene) -> AnalyzerReport:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            with httpx.Client(timeout=self.timeout, transport=self._transport) as client:
                resp = client.post(self.endpoint, json=self.build_request(scene), headers=headers)
                resp.raise_for_status()
                body = resp.json()
            content = body["choices"][0]["message"]["content"]
            data = json.loads(content)
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise AnalyzerUnavailable(f"analyzer request failed: {exc}") from None
        return report_from_dict(data, (scene.origin_lat, scene.origin_lon))
