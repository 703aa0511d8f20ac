"""Report assembly and emission.

The JSON form is canonical: sorted keys, scalars as "num/den" strings or
residue integers, no volatile fields.  Identical inputs therefore produce
byte-identical reports; wall-clock timing is shown only in the text form.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field

TOOL_VERSION = "0.1.0"


@dataclass
class Report:
    command: str
    verdict: str | None = None
    exit_code: int = 0
    config: dict = dc_field(default_factory=dict)
    results: dict = dc_field(default_factory=dict)
    windows: dict = dc_field(default_factory=dict)
    witnesses: dict = dc_field(default_factory=dict)
    input_digest: str | None = None
    timing_ms: float | None = None

    def payload(self):
        out = {
            "command": self.command,
            "tool_version": TOOL_VERSION,
            "config": self.config,
            "results": self.results,
        }
        if self.verdict is not None:
            out["verdict"] = self.verdict
        if self.windows:
            out["windows"] = self.windows
        if self.witnesses:
            out["witnesses"] = self.witnesses
        if self.input_digest is not None:
            out["input_digest"] = self.input_digest
        return out


def digest_inputs(*chunks) -> str:
    h = hashlib.sha256()
    for chunk in chunks:
        if isinstance(chunk, bytes):
            h.update(chunk)
        else:
            h.update(json.dumps(chunk, sort_keys=True, default=str).encode())
        h.update(b"\x00")
    return h.hexdigest()[:16]


def emit_report(report: Report, format: str = "json") -> bytes:
    if format == "json":
        return (
            json.dumps(report.payload(), sort_keys=True, indent=2, default=str) + "\n"
        ).encode()
    if format == "text":
        lines = ["koszulkit %s :: %s" % (TOOL_VERSION, report.command)]
        if report.verdict is not None:
            lines.append("verdict: %s" % report.verdict)
        for key, value in sorted(report.config.items()):
            lines.append("  config %s = %s" % (key, value))
        for key, value in sorted(report.windows.items()):
            lines.append("  window %s = %s" % (key, value))
        lines.extend(_text_block("result", report.results))
        lines.extend(_text_block("witness", report.witnesses))
        if report.input_digest:
            lines.append("  input digest %s" % report.input_digest)
        if report.timing_ms is not None:
            lines.append("  elapsed %.1f ms" % report.timing_ms)
        return ("\n".join(lines) + "\n").encode()
    raise ValueError("unknown format %r" % format)


def _text_block(prefix, data, indent="  "):
    lines = []
    for key, value in sorted(data.items(), key=lambda kv: str(kv[0])):
        if isinstance(value, dict):
            lines.append("%s%s %s:" % (indent, prefix, key))
            lines.extend(_text_block("", value, indent + "  "))
        else:
            lines.append("%s%s %s = %s" % (indent, prefix, key, value))
    return lines
