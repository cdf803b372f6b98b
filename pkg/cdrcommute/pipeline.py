"""End-to-end analysis: ingest, filter, infer, time and tabulate.

:func:`analyze` runs every stage in memory and :func:`emit_tables` writes the
figure and table analogues.  :func:`run_pipeline` does both for the CLI.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import date, datetime
from itertools import combinations
from pathlib import Path
from time import perf_counter

from cdrcommute.config import AnalysisConfig
from cdrcommute.exceptions import (
    ConfigError,
    DataError,
    EmptyInputError,
    InsufficientDataError,
    StageError,
    ZeroDwellError,
)
from cdrcommute.filters import (
    calendar_filter,
    resample_uniform,
    spatial_noise_filter,
    sparse_tower_screen,
    speed_screen,
    track_intervals,
)
from cdrcommute.geo import (
    gps_to_grid,
    grid_registry,
    haversine_km,
    load_tower_registry,
    parse_cdr_stream,
    parse_gps_stream,
)
from cdrcommute.homework import (
    commute_distance,
    distance_population,
    infer_home_work,
    radius_of_gyration,
)
from cdrcommute.objects import (
    BinDurations,
    CommuteDistanceRecord,
    CommuteSample,
    DistanceBins,
    DistanceDistribution,
    DwellInterval,
    DwellPortfolio,
    GpsPoint,
    GridCell,
    GridCellObservation,
    GridSpec,
    HomeWorkAssignment,
    KsResult,
    LogLogFit,
    RankCurve,
    RecoveryReport,
    Rejection,
    RunReport,
    SpearmanResult,
    TowerRegistry,
)
from cdrcommute.portfolio import (
    RankAccumulator,
    accumulate_dwell,
    loglog_slope,
    observed_days,
    travel_range,
)
from cdrcommute.stats import (
    gaussian_fit_window,
    ks_two_sample,
    median_peak,
    qq_points,
    spearman,
)
from cdrcommute.synth import evaluate_recovery, load_ground_truth
from cdrcommute.timing import (
    PEAK_PROXY,
    duration_by_bin,
    samples_by_bin,
    timing_distribution,
    user_commutes,
)
from cdrcommute.types import (
    LEGS,
    PERIODS,
    CsvValue,
    Leg,
    LocationId,
    Observation,
    Period,
    Weighting,
)
from cdrcommute.utils import (
    format_timestamp,
    minutes_of_day,
    parse_bool,
    parse_optional_float,
    write_csv,
)

log = logging.getLogger(__name__)

WEIGHTINGS: tuple[Weighting, ...] = ("dwell", "visits")
PEAK_METHODS = ("median", "gaussian_mean")

HOME_WORK_HEADER = (
    "user_id",
    "home_id",
    "work_id",
    "night_share",
    "day_share",
    "distance_km",
    "corrected_km",
    "gyration_km",
)
SAMPLES_HEADER = (
    "user_id",
    "day",
    "leg",
    "depart",
    "arrive",
    "duration_minutes",
    "distance_km",
    "implausible",
)
FIG3_HEADER = (
    "bucket_lo_minutes",
    "bucket_hi_minutes",
    "depart_density",
    "arrive_density",
)
TABLE2_HEADER = ("region", "leg", "method", "rho", "p_value", "n", "p_method")
KS_HEADER = ("region_a", "region_b", "d_statistic", "p_value", "n1", "n2")
FIT_HEADER = ("mu_minutes", "sigma_minutes", "window_lo", "window_hi", "n")
QQ_HEADER = ("theoretical_minutes", "empirical_minutes")

# Eligibility stages a user can end at, besides the rejection reasons
STAGE_SPEED_SCREEN = "speed_screen"
STAGE_CALENDAR = "calendar"
STAGE_NO_DWELL = "no_dwell"
STAGE_SPARSE_TOWER = "sparse_tower"
STAGE_NO_SAMPLES = "no_samples"
STAGE_SAMPLED = "sampled"


@dataclass
class PipelineResults:
    """Everything one analysis run computed, ready to be tabulated."""

    config: AnalysisConfig
    report: RunReport
    registry: TowerRegistry | None = None
    portfolios: dict[str, DwellPortfolio] = field(default_factory=dict)
    curves: dict[Period, RankCurve] = field(default_factory=dict)
    fits: dict[Period, LogLogFit | None] = field(default_factory=dict)
    mean_range: dict[Period, float] = field(default_factory=dict)
    assignments: dict[str, HomeWorkAssignment] = field(default_factory=dict)
    distances: dict[str, CommuteDistanceRecord] = field(default_factory=dict)
    gyration: dict[Weighting, dict[str, float]] = field(default_factory=dict)
    samples: list[CommuteSample] = field(default_factory=list)
    eligibility: dict[str, str] = field(default_factory=dict)

    def analysis_samples(self) -> list[CommuteSample]:
        """Samples feeding the figures, without flagged ones if so configured."""
        if not self.config.exclude_implausible:
            return self.samples
        return [s for s in self.samples if not s.implausible]

    def distribution(self) -> DistanceDistribution | None:
        """Commute distance PDF/CDF, or ``None`` without any distance."""
        if not self.distances:
            return None
        return distance_population(
            list(self.distances.values()), self.config.distance_bin_km
        )


class _Stages:
    """Times the pipeline stages and records their survivors."""

    def __init__(self, report: RunReport):
        self.report = report
        self.elapsed = 0.0

    @contextmanager
    def run(self, name: str) -> Iterator[None]:
        start = perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as err:
            log.error("Stage %s failed: %s", name, err)
            raise StageError(name, err) from err
        self.elapsed = perf_counter() - start

    def record(self, name: str, users: int, rows: int) -> None:
        self.report.add_stage(name, users, rows, self.elapsed)
        log.info(
            "Stage %s: %d users, %d rows in %.3fs", name, users, rows, self.elapsed
        )


def _load_cdr(
    cfg: AnalysisConfig,
) -> tuple[dict[str, list[Observation]], TowerRegistry, RunReport]:
    assert cfg.cdr is not None and cfg.towers is not None

    with Path(cfg.towers).open("rb") as fh:
        registry = load_tower_registry(fh)
    with Path(cfg.cdr).open("rb") as fh:
        users, parse_report = parse_cdr_stream(fh, registry)

    observations: dict[str, list[Observation]] = {
        user_id: list(events) for user_id, events in users.items()
    }
    return observations, registry, RunReport("cdr", parse=parse_report)


def _grid_anchor(
    cfg: AnalysisConfig, vehicles: Mapping[str, Sequence[GpsPoint]]
) -> tuple[float, float]:
    if cfg.grid_anchor_lat is not None and cfg.grid_anchor_lon is not None:
        return (cfg.grid_anchor_lat, cfg.grid_anchor_lon)
    points = [p for trace in vehicles.values() for p in trace]
    return (min(p.latitude for p in points), min(p.longitude for p in points))


def _load_gps(cfg: AnalysisConfig) -> tuple[dict[str, list[GpsPoint]], RunReport]:
    assert cfg.gps is not None

    bounds = None
    if cfg.towers is not None:
        with Path(cfg.towers).open("rb") as fh:
            bounds = load_tower_registry(fh).bounds().expanded(1.0)
    with Path(cfg.gps).open("rb") as fh:
        vehicles, parse_report = parse_gps_stream(fh, bounds)

    return vehicles, RunReport("gps", parse=parse_report)


def _discretize(
    vehicles: Mapping[str, Sequence[GpsPoint]], spec: GridSpec
) -> tuple[dict[str, list[Observation]], TowerRegistry]:
    users: dict[str, list[Observation]] = {}
    cells: set[GridCell] = set()

    for vehicle_id, trace in vehicles.items():
        observations: list[Observation] = []
        for point in trace:
            cell = gps_to_grid(point, spec)
            cells.add(cell)
            observations.append(
                GridCellObservation(vehicle_id, point.timestamp, cell.location_id)
            )
        users[vehicle_id] = observations

    return users, grid_registry(sorted(cells), spec)


def _ingest_cdr(
    cfg: AnalysisConfig, stages: _Stages
) -> tuple[dict[str, list[Observation]], TowerRegistry]:
    with stages.run("parse"):
        users, registry, stages.report = _load_cdr(cfg)
    if stages.report.parse.accepted:
        stages.record("parse", len(users), stages.report.parse.accepted)
    return users, registry


def _ingest_gps(
    cfg: AnalysisConfig, stages: _Stages, eligibility: dict[str, str]
) -> tuple[dict[str, list[Observation]], TowerRegistry | None]:
    """Parse, speed-screen and discretize vehicle traces onto the grid."""
    with stages.run("parse"):
        vehicles, stages.report = _load_gps(cfg)
    if not stages.report.parse.accepted:
        return {}, None
    stages.record("parse", len(vehicles), stages.report.parse.accepted)

    with stages.run("speed_screen"):
        kept: dict[str, list[GpsPoint]] = {}
        for vehicle_id, trace in vehicles.items():
            if speed_screen(trace, cfg.filters).keep:
                kept[vehicle_id] = trace
            else:
                eligibility[vehicle_id] = STAGE_SPEED_SCREEN
        if len(kept) < len(vehicles):
            log.warning(
                "Speed screen discarded %d vehicle traces", len(vehicles) - len(kept)
            )
    stages.record("speed_screen", len(kept), sum(len(t) for t in kept.values()))

    if not kept:
        stages.report.notes.append("every vehicle trace failed the speed screen")
        return {}, None

    with stages.run("grid"):
        spec = GridSpec(_grid_anchor(cfg, kept), cfg.grid_cell_km)
        users, registry = _discretize(kept, spec)
    stages.record("grid", len(users), sum(len(u) for u in users.values()))

    return users, registry


def user_intervals(
    events: Sequence[Observation], registry: TowerRegistry, cfg: AnalysisConfig
) -> list[DwellInterval]:
    """Resample, de-noise and segment one user's events into dwell intervals."""
    track = resample_uniform(events, cfg.filters)
    track = spatial_noise_filter(track, registry, cfg.filters)
    return track_intervals(track, cfg.filters)


def _fit_curve(
    curve: RankCurve, cfg: AnalysisConfig, report: RunReport
) -> LogLogFit | None:
    try:
        return loglog_slope(curve, cfg.zipf_rank_range)
    except (InsufficientDataError, ZeroDwellError) as err:
        report.notes.append(f"{curve.period} rank curve not fitted: {err}")
        return None


def analyze(cfg: AnalysisConfig) -> PipelineResults:
    """Run every analysis stage in memory.

    Stage failures are raised as :class:`StageError` naming the stage.  An
    input without a single usable row gives a result whose report is flagged
    ``empty``.

    :param cfg: (:class:`cdrcommute.config.AnalysisConfig`) - Run configuration
    :return: :class:`PipelineResults`
    """
    stages = _Stages(RunReport(cfg.mode))
    eligibility: dict[str, str] = {}

    if cfg.mode == "gps":
        users, registry = _ingest_gps(cfg, stages, eligibility)
    else:
        users, registry = _ingest_cdr(cfg, stages)
    report = stages.report
    results = PipelineResults(cfg, report, registry)

    if not report.parse.accepted:
        log.warning("No usable records in %s input", cfg.mode)
        report.empty = True
        return results
    if registry is None:
        results.eligibility = dict(sorted(eligibility.items()))
        return results

    with stages.run("calendar"):
        events: dict[str, list[Observation]] = {}
        for user_id in sorted(users):
            kept_events = calendar_filter(users[user_id], cfg.filters)
            if kept_events:
                events[user_id] = kept_events
            else:
                eligibility[user_id] = STAGE_CALENDAR
    stages.record("calendar", len(events), sum(len(e) for e in events.values()))

    with stages.run("dwell"):
        intervals: dict[str, list[DwellInterval]] = {}
        for user_id, user_events in events.items():
            user_dwell = user_intervals(user_events, registry, cfg)
            if user_dwell:
                intervals[user_id] = user_dwell
            else:
                eligibility[user_id] = STAGE_NO_DWELL
    stages.record(
        "dwell", len(intervals), sum(len(i) for i in intervals.values())
    )

    if cfg.mode == "cdr":
        with stages.run("sparse_screen"):
            screen = sparse_tower_screen(intervals, registry, cfg.filters)
            for user_id in screen.removed:
                eligibility[user_id] = STAGE_SPARSE_TOWER
                del intervals[user_id]
            if screen.pathological:
                report.notes.append("every tower is sparse")
        stages.record(
            "sparse_screen", len(intervals), sum(len(i) for i in intervals.values())
        )
    else:
        report.notes.append("sparse tower screen skipped for grid cells")

    with stages.run("portfolio"):
        accumulator = RankAccumulator(cfg.curve_max_rank)
        ranges: dict[Period, list[int]] = {p: [] for p in PERIODS}
        for user_id, user_dwell in intervals.items():
            portfolio = accumulate_dwell(
                user_dwell, user_id, cfg.day_start, cfg.night_start
            )
            results.portfolios[user_id] = portfolio
            accumulator.add(portfolio, observed_days(user_dwell))
            day_range, night_range = travel_range(portfolio)
            ranges["day"].append(day_range)
            ranges["night"].append(night_range)

        for period in PERIODS:
            curve = accumulator.curve(period)
            results.curves[period] = curve
            results.fits[period] = _fit_curve(curve, cfg, report) if curve else None
            values = ranges[period]
            results.mean_range[period] = sum(values) / len(values) if values else 0.0
    stages.record(
        "portfolio",
        len(results.portfolios),
        sum(len(p) for p in results.portfolios.values()),
    )

    with stages.run("home_work"):
        for user_id, portfolio in results.portfolios.items():
            assignment = infer_home_work(portfolio, cfg.share_threshold)
            if isinstance(assignment, Rejection):
                log.debug("User %s rejected: %s", user_id, assignment.reason)
                eligibility[user_id] = assignment.reason.value
            else:
                results.assignments[user_id] = assignment
    stages.record("home_work", len(results.assignments), len(results.assignments))

    with stages.run("commute_distance"):
        for w in WEIGHTINGS:
            results.gyration[w] = {}
        for user_id, assignment in results.assignments.items():
            record = commute_distance(
                assignment, registry, cfg.min_commute_km, cfg.crow_fly_factor
            )
            if isinstance(record, Rejection):
                eligibility[user_id] = record.reason.value
                continue
            results.distances[user_id] = record
            for w in WEIGHTINGS:
                results.gyration[w][user_id] = radius_of_gyration(
                    intervals[user_id], registry, w
                )
    stages.record("commute_distance", len(results.distances), len(results.distances))

    with stages.run("timing"):
        windows = {"morning": cfg.morning_window, "evening": cfg.evening_window}
        sampled = 0
        for user_id, record in results.distances.items():
            samples, _ = user_commutes(
                events[user_id],
                results.assignments[user_id],
                windows,
                cfg.min_call_rate,
                cfg.noon,
                record.distance_km,
                cfg.plausibility_cutoff,
            )
            results.samples.extend(samples)
            if samples:
                sampled += 1
                eligibility[user_id] = STAGE_SAMPLED
            else:
                eligibility[user_id] = STAGE_NO_SAMPLES
    stages.record("timing", sampled, len(results.samples))

    parsed = report.stages[0].users
    report.identified_fraction = len(results.assignments) / parsed if parsed else 0.0
    report.sampled_fraction = sampled / parsed if parsed else 0.0
    results.eligibility = dict(sorted(eligibility.items()))

    return results


def write_report(report: RunReport, outdir: Path) -> Path:
    """Write ``report.json`` (stage timings are only logged)."""
    path = Path(outdir) / "report.json"
    path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def run_pipeline(cfg: AnalysisConfig) -> RunReport:
    """Analyze the configured input and write every output table.

    :param cfg: (:class:`cdrcommute.config.AnalysisConfig`) - Run configuration
    :return: :class:`cdrcommute.objects.RunReport`
    :raises ConfigError: on an invalid input selection or unwritable outdir
    :raises EmptyInputError: after writing an empty report, if the input holds
        no usable rows
    :raises StageError: if a stage fails
    """
    cfg.validate_inputs()
    results = analyze(cfg)

    if results.report.empty:
        _prepare_outdir(cfg.outdir)
        write_report(results.report, cfg.outdir)
        raise EmptyInputError(f"No usable records in {cfg.cdr or cfg.gps}")

    emit_tables(results, cfg.outdir)
    return results.report


def _prepare_outdir(outdir: Path) -> None:
    try:
        Path(outdir).mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"Output directory {outdir} is not writable: {err}") from err


def _clock(minutes: float | None) -> str | None:
    if minutes is None:
        return None
    hours, rest = divmod(round(minutes), 60)
    return f"{hours:02d}:{rest:02d}"


def _peak_rows(
    leg: Leg, groups: Sequence[Sequence[CommuteSample]], cfg: AnalysisConfig
) -> dict[str, list[float | None]]:
    """Median and fitted-mean peak time (minutes) per bin."""
    window = cfg.morning_fit_window if leg == "morning" else cfg.evening_fit_window
    peaks: dict[str, list[float | None]] = {m: [] for m in PEAK_METHODS}

    for group in groups:
        times = [minutes_of_day(s.proxy(PEAK_PROXY[leg])) for s in group]
        peaks["median"].append(median_peak(times) if times else None)
        try:
            peaks["gaussian_mean"].append(gaussian_fit_window(times, window).mu)
        except InsufficientDataError:
            peaks["gaussian_mean"].append(None)

    return peaks


def _trend(values: Sequence[float | None]) -> SpearmanResult | None:
    """Spearman test of values against their bin order, skipping gaps."""
    pairs = [(i, v) for i, v in enumerate(values) if v is not None]
    try:
        return spearman([i for i, _ in pairs], [v for _, v in pairs])
    except DataError:
        return None


def _spearman_row(
    region: str, leg: str, method: str, result: SpearmanResult | None, n: int
) -> tuple[CsvValue, ...]:
    if result is None:
        return (region, leg, method, None, None, n, None)
    return (region, leg, method, result.rho, result.p_value, result.n, result.method)


def emit_tables(results: PipelineResults, outdir: Path) -> list[Path]:
    """Write every figure and table analogue as CSV plus ``report.json``.

    Empty distance bins still get a row, with ``n`` = 0 and blank statistics.

    :param results: (:class:`PipelineResults`) - Output of :func:`analyze`
    :param outdir: (:code:`pathlib.Path`) - Directory to write into
    :return: the files written
    :raises ConfigError: if the directory cannot be created
    """
    cfg = results.config
    outdir = Path(outdir)
    _prepare_outdir(outdir)
    written: list[Path] = []

    def emit(
        name: str, header: Sequence[str], rows: Iterable[Iterable[CsvValue]]
    ) -> None:
        path = outdir / name
        count = write_csv(path, header, rows)
        log.info("Wrote %d rows to %s", count, path)
        written.append(path)

    for period in PERIODS:
        curve = results.curves.get(period, RankCurve(period))
        emit(f"fig1_{period}.csv", ("rank", "mean_dwell_seconds"), curve.points)
    emit(
        "fig1_range.csv",
        ("period", "mean_locations", "n_users"),
        (
            (p, results.mean_range.get(p, 0.0), len(results.portfolios))
            for p in PERIODS
        ),
    )
    lo, hi = cfg.zipf_rank_range
    fit_rows: list[tuple[CsvValue, ...]] = []
    for period in PERIODS:
        fit = results.fits.get(period)
        if fit is None:
            fit_rows.append((period, None, None, None, 0, lo, hi))
        else:
            fit_rows.append(
                (period, fit.slope, fit.intercept, fit.rss, fit.n, lo, hi)
            )
    emit(
        "fig1_fit.csv",
        ("period", "slope", "intercept", "rss", "n", "rank_lo", "rank_hi"),
        fit_rows,
    )

    distribution = results.distribution()
    emit(
        "distance_pdf.csv",
        ("bin_lo_km", "bin_hi_km", "density"),
        distribution.pdf.buckets() if distribution else (),
    )
    emit(
        "distance_cdf.csv",
        ("distance_km", "cdf"),
        zip(distribution.cdf.values, distribution.cdf.probs) if distribution else (),
    )
    emit(
        "fig2_summary.csv",
        ("region", "n", "mean_km"),
        [
            (
                cfg.region,
                distribution.n if distribution else 0,
                distribution.mean_km if distribution else None,
            )
        ],
    )

    gyration = results.gyration.get(cfg.gyration_weighting, {})
    home_work_rows = []
    for user_id, a in results.assignments.items():
        record = results.distances.get(user_id)
        home_work_rows.append(
            (
                user_id,
                a.home,
                a.work,
                a.night_share,
                a.day_share,
                record.distance_km if record else None,
                record.corrected_km if record else None,
                gyration.get(user_id),
            )
        )
    emit("home_work.csv", HOME_WORK_HEADER, home_work_rows)

    emit(
        "commute_samples.csv",
        SAMPLES_HEADER,
        (
            (
                s.user_id,
                s.day.isoformat(),
                s.leg,
                format_timestamp(s.depart_proxy),
                format_timestamp(s.arrive_proxy),
                s.duration,
                s.distance_km,
                s.implausible,
            )
            for s in results.samples
        ),
    )
    emit("eligibility.csv", ("user_id", "stage"), results.eligibility.items())
    locations = results.registry.items() if results.registry else ()
    emit(
        "locations.csv",
        ("location_id", "lat", "lon"),
        ((loc, lat, lon) for loc, (lat, lon) in locations),
    )

    samples = results.analysis_samples()
    table2: list[tuple[CsvValue, ...]] = []
    fig4_rows: list[tuple[CsvValue, ...]] = []
    timing_bins = cfg.timing_bins
    duration_bins = cfg.duration_bins

    for leg in LEGS:
        depart = timing_distribution(samples, timing_bins, leg, "depart")
        arrive = timing_distribution(samples, timing_bins, leg, "arrive")
        for i in range(len(timing_bins)):
            emit(
                f"fig3_{leg}_{timing_bins.label(i)}.csv",
                FIG3_HEADER,
                (
                    (lo_m, hi_m, d, a)
                    for (lo_m, hi_m, d), (_, _, a) in zip(
                        depart[i].buckets(), arrive[i].buckets()
                    )
                ),
            )

        groups = samples_by_bin(samples, timing_bins, leg)
        peaks = _peak_rows(leg, groups, cfg)
        for method in PEAK_METHODS:
            for i, group in enumerate(groups):
                peak = peaks[method][i]
                fig4_rows.append(
                    (leg, timing_bins.label(i), method, len(group), peak, _clock(peak))
                )
            n_points = sum(1 for v in peaks[method] if v is not None)
            table2.append(
                _spearman_row(cfg.region, leg, method, _trend(peaks[method]), n_points)
            )

        durations = duration_by_bin(samples, duration_bins, leg)
        _emit_durations(emit, leg, durations, duration_bins)
        means = [d.summary.mean for d in durations]
        n_points = sum(1 for m in means if m is not None)
        table2.append(
            _spearman_row(cfg.region, leg, "mean_duration", _trend(means), n_points)
        )

        _emit_fit(emit, leg, samples, cfg)

    emit(
        "fig4.csv",
        ("leg", "bin", "method", "n", "peak_minutes", "peak_time"),
        fig4_rows,
    )
    emit("table2.csv", TABLE2_HEADER, table2)

    emit(
        "gyration_correlation.csv",
        ("weighting", "rho", "p_value", "n", "p_method"),
        _gyration_rows(results),
    )

    written.append(write_report(results.report, outdir))

    return written


def _emit_durations(
    emit: Callable[..., None],
    leg: Leg,
    durations: Sequence[BinDurations],
    bins: DistanceBins,
) -> None:
    emit(
        f"fig5_{leg}.csv",
        ("bin_lo_km", "bin_hi_km", "n", "mean_minutes", "stderr_minutes"),
        (
            (d.summary.lo, d.summary.hi, d.summary.n, d.summary.mean, d.summary.stderr)
            for d in durations
        ),
    )
    for i, d in enumerate(durations):
        label = bins.label(i)
        emit(
            f"fig6_{leg}_{label}.csv",
            ("bucket_lo_minutes", "bucket_hi_minutes", "density"),
            d.histogram.buckets() if d.summary.n else (),
        )
        emit(
            f"fig6_{leg}_{label}_cdf.csv",
            ("duration_minutes", "cdf"),
            zip(d.cdf.values, d.cdf.probs),
        )


def _emit_fit(
    emit: Callable[..., None],
    leg: Leg,
    samples: Sequence[CommuteSample],
    cfg: AnalysisConfig,
) -> None:
    window = cfg.morning_fit_window if leg == "morning" else cfg.evening_fit_window
    times = [
        minutes_of_day(s.proxy(PEAK_PROXY[leg])) for s in samples if s.leg == leg
    ]
    try:
        fit = gaussian_fit_window(times, window)
    except InsufficientDataError:
        emit(f"s3_{leg}_fit.csv", FIT_HEADER, [])
        emit(f"s3_{leg}_qq.csv", QQ_HEADER, [])
        return

    lo, hi = fit.fit_window
    emit(
        f"s3_{leg}_fit.csv",
        FIT_HEADER,
        [(fit.mu, fit.sigma, lo, hi, fit.n)],
    )
    emit(
        f"s3_{leg}_qq.csv",
        QQ_HEADER,
        qq_points([t for t in times if lo <= t <= hi], fit),
    )


def _gyration_rows(results: PipelineResults) -> list[tuple[CsvValue, ...]]:
    users = sorted(results.distances)
    rows: list[tuple[CsvValue, ...]] = []

    for w in WEIGHTINGS:
        radii = results.gyration.get(w, {})
        x = [results.distances[u].distance_km for u in users]
        y = [radii[u] for u in users]
        try:
            r = spearman(x, y)
        except DataError:
            rows.append((w, None, None, len(users), None))
            continue
        rows.append((w, r.rho, r.p_value, r.n, r.method))

    return rows


def _read_csv(path: Path) -> list[dict[str, str]]:
    try:
        with Path(path).open(encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as err:
        raise DataError(f"Unable to read {path}: {err}") from err


def read_home_work(path: Path) -> tuple[list[HomeWorkAssignment], dict[str, float]]:
    """Read ``home_work.csv`` back into assignments and commute distances."""
    assignments: list[HomeWorkAssignment] = []
    distances: dict[str, float] = {}

    for row in _read_csv(path):
        assignments.append(
            HomeWorkAssignment(
                row["user_id"],
                row["home_id"],
                row["work_id"],
                float(row["night_share"]),
                float(row["day_share"]),
            )
        )
        distance = parse_optional_float(row["distance_km"])
        if distance is not None:
            distances[row["user_id"]] = distance

    return assignments, distances


def read_samples(path: Path) -> list[CommuteSample]:
    """Read ``commute_samples.csv`` back into commute samples."""
    samples: list[CommuteSample] = []
    for row in _read_csv(path):
        leg: Leg = "morning" if row["leg"] == "morning" else "evening"
        samples.append(
            CommuteSample(
                row["user_id"],
                date.fromisoformat(row["day"]),
                leg,
                datetime.fromisoformat(row["depart"]),
                datetime.fromisoformat(row["arrive"]),
                parse_optional_float(row["distance_km"]),
                parse_bool(row["implausible"]),
            )
        )
    return samples


def read_locations(path: Path) -> TowerRegistry:
    """Read ``locations.csv`` back into a registry."""
    return TowerRegistry(
        {
            row["location_id"]: (float(row["lat"]), float(row["lon"]))
            for row in _read_csv(path)
        }
    )


def _near_matcher(
    inferred: TowerRegistry, true: TowerRegistry, km: float
) -> Callable[[LocationId, LocationId], bool]:
    def matches(location: LocationId, tower: LocationId) -> bool:
        if location not in inferred or tower not in true:
            return False
        return (
            haversine_km(inferred.coordinates(location), true.coordinates(tower))
            <= km
        )

    return matches


def evaluate(
    cfg: AnalysisConfig, truth_path: Path, towers_path: Path | None = None
) -> RecoveryReport:
    """Score the outputs in ``cfg.outdir`` against a synthetic world's truth.

    In GPS mode a grid cell recovers a tower when the tower lies within half a
    cell diagonal of the cell centre.  Writes ``recovery.json`` next to the
    analysis outputs.

    :param cfg: (:class:`cdrcommute.config.AnalysisConfig`) - The config the
        analysis ran with
    :param truth_path: (:code:`pathlib.Path`) - ``ground_truth.csv``
    :param towers_path: (:code:`pathlib.Path`) - The world's ``towers.csv``,
        defaults to the one next to ``truth_path``
    :return: :class:`cdrcommute.objects.RecoveryReport`
    """
    outdir = Path(cfg.outdir)
    truth = load_ground_truth(truth_path)
    assignments, distances = read_home_work(outdir / "home_work.csv")
    samples = read_samples(outdir / "commute_samples.csv")
    eligibility = {
        row["user_id"]: row["stage"] for row in _read_csv(outdir / "eligibility.csv")
    }

    mode = json.loads((outdir / "report.json").read_text(encoding="utf-8"))["mode"]
    if mode == "gps":
        towers_path = towers_path or Path(truth_path).parent / "towers.csv"
        with Path(towers_path).open("rb") as fh:
            towers = load_tower_registry(fh)
        matches = _near_matcher(
            read_locations(outdir / "locations.csv"),
            towers,
            cfg.grid_cell_km * math.sqrt(2) / 2,
        )
        report = evaluate_recovery(
            truth,
            assignments,
            distances,
            samples,
            eligibility,
            matches,
            exclude_implausible=cfg.exclude_implausible,
        )
    else:
        report = evaluate_recovery(
            truth,
            assignments,
            distances,
            samples,
            eligibility,
            exclude_implausible=cfg.exclude_implausible,
        )

    path = outdir / "recovery.json"
    path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    log.info("Wrote recovery report to %s", path)

    return report


def compare_regions(
    home_work: Mapping[str, Path], outdir: Path
) -> list[tuple[str, str, KsResult]]:
    """Two-sample KS test of commute distances for every pair of regions.

    Writes ``ks_pairs.csv`` and ``distance_means.csv``.

    :param home_work: ``home_work.csv`` path per region label
    :param outdir: (:code:`pathlib.Path`) - Directory to write into
    :return: ``(region_a, region_b, result)`` per pair, in label order
    :raises InsufficientDataError: if a region has no commute distance
    """
    distances: dict[str, list[float]] = {}
    for region in sorted(home_work):
        _, by_user = read_home_work(home_work[region])
        if not by_user:
            raise InsufficientDataError(f"Region {region} has no commute distances")
        distances[region] = [by_user[u] for u in sorted(by_user)]

    pairs = [
        (a, b, ks_two_sample(distances[a], distances[b]))
        for a, b in combinations(sorted(distances), 2)
    ]

    outdir = Path(outdir)
    _prepare_outdir(outdir)
    write_csv(
        outdir / "ks_pairs.csv",
        KS_HEADER,
        ((a, b, r.d_statistic, r.p_value, r.n1, r.n2) for a, b, r in pairs),
    )
    write_csv(
        outdir / "distance_means.csv",
        ("region", "n", "mean_km"),
        ((r, len(d), sum(d) / len(d)) for r, d in distances.items()),
    )
    log.info("Compared %d regions in %d pairs", len(distances), len(pairs))

    return pairs
