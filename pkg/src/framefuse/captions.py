"""Long-video caption synthesis from short annotated clips.

Clips are packed into composite records of 5 to 30 minutes; each clip
becomes one timestamped segment of the merged caption, and every record
carries the frame-sampling instruction string used for training prompts.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError

logger = logging.getLogger(__name__)

MIN_DURATION_S = 300.0
MAX_DURATION_S = 1800.0
DEFAULT_RECORD_FRAMES = 32


@dataclass(frozen=True)
class ClipRecord:
    """A short annotated clip: id, duration in seconds, caption text."""

    id: str
    duration_s: float
    caption: str

    def __post_init__(self):
        if not (math.isfinite(self.duration_s) and self.duration_s > 0):
            raise ParameterError(f"clip {self.id!r}: duration must be > 0, got {self.duration_s}")
        if not self.caption:
            raise ParameterError(f"clip {self.id!r}: caption must be nonempty")


@dataclass(frozen=True)
class Segment:
    """One clip's span inside a composite record: [start_s, end_s)."""

    start_s: float
    end_s: float
    caption: str


@dataclass(frozen=True)
class LongVideoRecord:
    """A synthesized long video: ordered clips, timestamped segments,
    merged caption, and the frame-sampling instruction string."""

    clip_ids: tuple[str, ...]
    total_duration_s: float
    segments: tuple[Segment, ...]
    merged_caption: str
    instruction: str

    def __post_init__(self):
        if not MIN_DURATION_S <= self.total_duration_s <= MAX_DURATION_S:
            raise ParameterError(
                f"record duration {self.total_duration_s:.1f}s outside "
                f"[{MIN_DURATION_S:.0f}, {MAX_DURATION_S:.0f}]"
            )
        segments = tuple(self.segments)
        if not segments or len(segments) != len(self.clip_ids):
            raise ParameterError("need one segment per clip")
        cursor = 0.0
        for seg in segments:
            if abs(seg.start_s - cursor) > 1e-6:
                raise ParameterError(
                    f"segment starting at {seg.start_s} leaves a gap after {cursor}"
                )
            if seg.end_s <= seg.start_s:
                raise ParameterError(f"segment [{seg.start_s}, {seg.end_s}) is empty")
            cursor = seg.end_s
        if abs(cursor - self.total_duration_s) > 1e-6:
            raise ParameterError(
                f"segments end at {cursor}, record duration is {self.total_duration_s}"
            )
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "clip_ids", tuple(self.clip_ids))

    def to_dict(self) -> dict:
        return {
            "clip_ids": list(self.clip_ids),
            "total_duration_s": self.total_duration_s,
            "segments": [
                {"start_s": s.start_s, "end_s": s.end_s, "caption": s.caption}
                for s in self.segments
            ],
            "merged_caption": self.merged_caption,
            "instruction": self.instruction,
        }


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def format_mmss(seconds: float) -> str:
    """MM:SS with seconds rounded half-up."""
    total = _round_half_up(seconds)
    return f"{total // 60:02d}:{total % 60:02d}"


def sample_timestamps(total_s: float, n: int) -> list[float]:
    """n evenly spaced timestamps starting at 0: t_j = j * total_s / n."""
    if n < 1:
        raise ParameterError(f"sample count must be >= 1, got {n}")
    if not (math.isfinite(total_s) and total_s > 0):
        raise ParameterError(f"total duration must be > 0, got {total_s}")
    return [j * total_s / n for j in range(n)]


def render_frame_instruction(n_frames: int, total_s: float,
                             timestamps: list[float]) -> str:
    """The fixed prompt sentence embedding frame count, duration, and
    sampled timestamps. Duration renders as the nearest integer and each
    timestamp with one decimal, so output is byte-stable."""
    if n_frames < 1:
        raise ParameterError(f"n_frames must be >= 1, got {n_frames}")
    if len(timestamps) != n_frames:
        raise ParameterError(f"expected {n_frames} timestamps, got {len(timestamps)}")
    prev = None
    for t in timestamps:
        if not (math.isfinite(t) and 0 <= t <= total_s):
            raise ParameterError(f"timestamp {t} outside [0, {total_s}]")
        if prev is not None and t <= prev:
            raise ParameterError("timestamps must be strictly increasing")
        prev = t
    listed = ", ".join(f"{t:.1f}" for t in timestamps)
    return (
        f"This video samples {n_frames} frames of a "
        f"{_round_half_up(total_s)}-second video at {listed} seconds."
    )


def build_record(clips: list[ClipRecord], n_frames: int = DEFAULT_RECORD_FRAMES) -> LongVideoRecord:
    """Assemble one composite record from an ordered clip list.

    Segment i spans the cumulative durations [sum(dur[:i]), sum(dur[:i+1]));
    the merged caption joins "[MM:SS - MM:SS] <caption>" blocks with
    newlines. The total duration must land in the 5 to 30 minute window.
    """
    if not clips:
        raise ParameterError("cannot build a record from zero clips")
    total = sum(c.duration_s for c in clips)
    if not MIN_DURATION_S <= total <= MAX_DURATION_S:
        raise ParameterError(
            f"total duration {total:.1f}s outside [{MIN_DURATION_S:.0f}, {MAX_DURATION_S:.0f}]"
        )
    segments = []
    blocks = []
    cursor = 0.0
    for clip in clips:
        end = cursor + clip.duration_s
        segments.append(Segment(start_s=cursor, end_s=end, caption=clip.caption))
        blocks.append(f"[{format_mmss(cursor)} - {format_mmss(end)}] {clip.caption}")
        cursor = end
    instruction = render_frame_instruction(
        n_frames, total, sample_timestamps(total, n_frames)
    )
    return LongVideoRecord(
        clip_ids=tuple(c.id for c in clips),
        total_duration_s=total,
        segments=tuple(segments),
        merged_caption="\n".join(blocks),
        instruction=instruction,
    )


def pack_clips(
    pool: list[ClipRecord],
    min_s: float = MIN_DURATION_S,
    max_s: float = MAX_DURATION_S,
    seed: int = 0,
    n_frames: int = DEFAULT_RECORD_FRAMES,
) -> list[LongVideoRecord]:
    """Pack clips into composite records of min_s to max_s seconds.

    Greedy single pass over a seeded shuffle: a group accumulates clips
    while the next clip still fits under max_s, closes when it would not,
    and is kept only if it reached min_s. Clips are used at most once;
    clips of max_s or longer are skipped with a warning.
    """
    if not pool:
        raise ParameterError("clip pool is empty")
    if not (MIN_DURATION_S <= min_s <= max_s <= MAX_DURATION_S):
        raise ParameterError(
            f"packing window [{min_s}, {max_s}] must lie within "
            f"[{MIN_DURATION_S:.0f}, {MAX_DURATION_S:.0f}]"
        )
    rng = np.random.default_rng(seed)
    shuffled = [pool[i] for i in rng.permutation(len(pool))]

    records = []
    group: list[ClipRecord] = []
    total = 0.0

    def close():
        nonlocal group, total
        if group:
            if total >= min_s:
                records.append(build_record(group, n_frames=n_frames))
            else:
                logger.warning(
                    "dropping group of %d clips (%.1fs < %.0fs minimum)",
                    len(group), total, min_s,
                )
        group = []
        total = 0.0

    for clip in shuffled:
        if clip.duration_s >= max_s:
            logger.warning("skipping clip %r: %.1fs is not below max %.1fs",
                           clip.id, clip.duration_s, max_s)
            continue
        if total + clip.duration_s > max_s:
            close()
        group.append(clip)
        total += clip.duration_s
    close()
    return records


def load_clip_manifest(path: str | Path) -> list[ClipRecord]:
    """Parse a manifest: a JSON array of {"id", "duration", "caption"}."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at byte offset {exc.pos}") from exc
    if not isinstance(doc, list):
        raise FormatError(f"{path}: manifest must be a JSON array")
    clips = []
    for i, entry in enumerate(doc):
        try:
            clips.append(
                ClipRecord(
                    id=str(entry["id"]),
                    duration_s=float(entry["duration"]),
                    caption=str(entry["caption"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: manifest entry {i} is malformed: {exc}") from exc
    return clips


def dataset_stats(records: list[LongVideoRecord]) -> dict:
    """Histograms of record durations (60 s bins over the 5 to 30 minute
    window) and merged-caption word counts, plus simple means."""
    if not records:
        raise ParameterError("no records to summarize")
    durations = [r.total_duration_s for r in records]
    words = [len(r.merged_caption.split()) for r in records]

    duration_hist = []
    lo = MIN_DURATION_S
    while lo < MAX_DURATION_S:
        hi = lo + 60.0
        count = sum(
            1 for d in durations
            if lo <= d < hi or (hi == MAX_DURATION_S and d == hi)
        )
        duration_hist.append({"lo": lo, "hi": hi, "count": count})
        lo = hi

    bin_w = 200
    top = max(words)
    n_bins = max(1, -(-top // bin_w))
    words_hist = []
    for b in range(n_bins):
        lo_w, hi_w = b * bin_w, (b + 1) * bin_w
        count = sum(1 for w in words if lo_w <= w < hi_w or (b == n_bins - 1 and w == hi_w))
        words_hist.append({"lo": lo_w, "hi": hi_w, "count": count})

    return {
        "count": len(records),
        "mean_duration_s": sum(durations) / len(durations),
        "mean_caption_words": sum(words) / len(words),
        "duration_hist": duration_hist,
        "caption_words_hist": words_hist,
    }
