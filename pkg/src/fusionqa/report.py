"""Evaluation reports and their JSON / CSV / Markdown / long-CSV emitters.

Human formats (CSV, Markdown, long CSV) print numbers with 6 significant
digits; JSON keeps full float precision. No timestamps are written, so a
report is a pure function of its inputs and config.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from . import __version__
from .raster import MultibandImage
from .spatial import SpatialRow, pan_row, spatial_report
from .spectral import SpectralRow, reference_rows, spectral_report

HPDI_MODES = ("abs", "signed", "both")

SPECTRAL_COLUMNS = ("sd", "en", "snr", "nrmse", "di", "cc")
SPATIAL_COLUMNS = ("mg", "sg", "fcc_band", "fcc_avg", "hpdi_abs", "hpdi_signed")
CSV_COLUMNS = (("method", "band") + SPECTRAL_COLUMNS + ("di_excluded",) + SPATIAL_COLUMNS
               + ("hpdi_excluded", "flags"))
DASH = "—"


def fmt6(value) -> str:
    """Canonical human-readable number: 6 significant digits, '' for missing."""
    if value is None:
        return ""
    return format(float(value), ".6g")


@dataclass
class EvaluationReport:
    scene_id: str
    spectral: list[SpectralRow] = field(default_factory=list)
    spatial: list[SpatialRow] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def flagged(self) -> bool:
        return any(r.flags for r in self.spectral) or any(r.flags for r in self.spatial)

    def _hpdi_fields(self, row: SpatialRow):
        mode = self.config.get("hpdi", "both")
        return (row.hpdi if mode in ("abs", "both") else None,
                row.hpdi_signed if mode in ("signed", "both") else None)

    def spectral_records(self) -> list[dict]:
        return [{"method": r.method_name, "band": r.band_name, "sd": r.sd, "en": r.entropy,
                 "snr": r.snr, "nrmse": r.nrmse, "di": r.di, "cc": r.cc,
                 "excluded": r.excluded_pixels, "flags": list(r.flags)}
                for r in self.spectral]

    def spatial_records(self) -> list[dict]:
        out = []
        for r in self.spatial:
            h_abs, h_signed = self._hpdi_fields(r)
            out.append({"method": r.method_name, "band": r.band_name, "mg": r.mg, "sg": r.sg,
                        "fcc_band": r.fcc, "fcc_avg": r.fcc_avg, "hpdi_abs": h_abs,
                        "hpdi_signed": h_signed, "excluded": r.excluded_pixels,
                        "flags": list(r.flags)})
        return out

    def to_dict(self) -> dict:
        return {"scene_id": self.scene_id, "config": self.config,
                "spectral": self.spectral_records(), "spatial": self.spatial_records(),
                "version": self.version}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def merged_records(self) -> list[dict]:
        """One record per (method, band), spectral and spatial columns side by side."""
        merged: dict[tuple[str, str], dict] = {}
        for rec in self.spectral_records():
            key = (rec["method"], rec["band"])
            row = merged.setdefault(key, {"method": key[0], "band": key[1], "flags": []})
            row.update({k: rec[k] for k in SPECTRAL_COLUMNS})
            row["di_excluded"] = rec["excluded"]
            row["flags"].extend(rec["flags"])
        for rec in self.spatial_records():
            key = (rec["method"], rec["band"])
            row = merged.setdefault(key, {"method": key[0], "band": key[1], "flags": []})
            row.update({k: rec[k] for k in SPATIAL_COLUMNS})
            row["hpdi_excluded"] = rec["excluded"]
            row["flags"].extend(rec["flags"])
        return list(merged.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in self.merged_records():
            cells = []
            for col in CSV_COLUMNS:
                v = rec.get(col)
                if col in ("method", "band"):
                    cells.append(v)
                elif col == "flags":
                    cells.append("; ".join(v))
                elif col.endswith("_excluded"):
                    cells.append("" if v is None else str(v))
                else:
                    cells.append(fmt6(v))
            writer.writerow(cells)
        return buf.getvalue()

    def to_long_csv(self) -> str:
        """``metric,method,band,value`` rows, convenient for bar-chart tools."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("metric", "method", "band", "value"))
        for rec in self.spectral_records():
            for col in SPECTRAL_COLUMNS:
                if rec[col] is not None:
                    writer.writerow((col, rec["method"], rec["band"], fmt6(rec[col])))
        for rec in self.spatial_records():
            for col in SPATIAL_COLUMNS:
                if rec[col] is not None:
                    writer.writerow((col, rec["method"], rec["band"], fmt6(rec[col])))
        return buf.getvalue()

    def to_markdown(self) -> str:
        def cell(v):
            return DASH if v is None else fmt6(v)

        lines = [f"# Fusion quality report: {self.scene_id}", "",
                 "## Spectral quality", "",
                 "| Method | Band | SD | En | SNR | NRMSE | DI | CC |",
                 "|---|---|---|---|---|---|---|---|"]
        for rec in self.spectral_records():
            lines.append("| " + " | ".join(
                [rec["method"], rec["band"]] + [cell(rec[c]) for c in SPECTRAL_COLUMNS]) + " |")
        mode = self.config.get("hpdi", "both")
        header = "| Method | Band | MG | SG | HPDI | FCC |"
        rule = "|---|---|---|---|---|---|"
        if mode == "both":
            header += " HPDI (signed) |"
            rule += "---|"
        lines += ["", "## Spatial quality", "", header, rule]
        for rec in self.spatial_records():
            hp = rec["hpdi_signed"] if mode == "signed" else rec["hpdi_abs"]
            cells = [rec["method"], rec["band"], cell(rec["mg"]), cell(rec["sg"]), cell(hp),
                     cell(rec["fcc_band"])]
            if mode == "both":
                cells.append(cell(rec["hpdi_signed"]))
            lines.append("| " + " | ".join(cells) + " |")
        flagged = [(r["method"], r["band"], f) for r in self.spectral_records() + self.spatial_records()
                   for f in r["flags"]]
        if flagged:
            lines += ["", "## Flagged cells", ""]
            lines += [f"- {m} / {b}: {f}" for m, b, f in flagged]
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "md":
            return self.to_markdown()
        raise ValueError(f"unknown report format {fmt!r}")


def evaluate(reference: MultibandImage, pan, fused_groups, scene_id: str = "scene",
             peak: float = 255.0, hpdi: str = "both", sg_normalizer: str = "printed",
             config: dict | None = None) -> EvaluationReport:
    """Build a full report for one or more fused products against one scene.

    Args:
        reference: upsampled MS, already at PAN size.
        pan: the PAN band.
        fused_groups: ordered ``(method_name, MultibandImage)`` pairs.
        config: extra items echoed into the report config (e.g. input paths).
    """
    if hpdi not in HPDI_MODES:
        raise ValueError(f"hpdi must be one of {HPDI_MODES}, got {hpdi!r}")
    cfg = dict(config or {})
    cfg.update({"peak": peak, "hpdi": hpdi, "sg_normalizer": sg_normalizer,
                "sobel_kernel": 3, "laplacian_kernel": 3, "bands": reference.names})
    report = EvaluationReport(scene_id=scene_id, config=cfg)
    report.spectral.extend(reference_rows(reference, "MS"))
    for name, image in fused_groups:
        report.spectral.extend(spectral_report(image, reference, name, peak))
        report.spatial.extend(spatial_report(image, pan, name, sg_normalizer))
    report.spatial.extend(spatial_report(reference, pan, "MS", sg_normalizer))
    report.spatial.append(pan_row(pan, sg_normalizer))
    return report
