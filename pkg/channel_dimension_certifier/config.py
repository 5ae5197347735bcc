"""Run configuration: an XML ``SweepConfig`` document validated against the
versioned schemas shipped in ``schemas/``.
"""
from dataclasses import dataclass, field, replace
import os
import pathlib
from typing import List, Optional, Tuple, Union

from lxml import etree, objectify

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.correlations import NoiseKind, NoiseModel
from channel_dimension_certifier.fiber import FIBER_PRESETS, FiberSpec
from channel_dimension_certifier.tm_estimation import TmMethod
from channel_dimension_certifier.witness import WitnessKind

File = Union[str, os.PathLike]
MubCount = Union[int, str]

FULL_MUB_SET = "d+1"
DEFAULT_DIMENSIONS = (4, 8, 13, 29, 53, 89, 131, 173)
DEFAULT_WITNESSES = (WitnessKind.FT_BAVARESCO, WitnessKind.PT_STEERING)
DEFAULT_MUB_COUNTS: Tuple[MubCount, ...] = (2,)

SCHEMAS_DIR = pathlib.Path(__file__).resolve().parent / "schemas"

_FIBER_FIELDS = {
    "LengthM": ("length_m", float),
    "CoreRadiusM": ("core_radius_m", float),
    "CoreIndex": ("n_core", float),
    "NumericalAperture": ("numerical_aperture", float),
    "ProfileExponent": ("alpha", float),
    "CenterWavelengthM": ("center_wavelength_m", float),
    "BandwidthM": ("bandwidth_m", float),
    "NumWavelengths": ("num_wavelengths", int),
    "SigmaM": ("sigma_m", float),
}


@dataclass(frozen=True)
class RunConfig:
    fiber: FiberSpec = field(default_factory=FiberSpec)
    fiber_label: str = "paper-2m"
    estimator: TmMethod = TmMethod.SPECTRAL_MEAN
    num_probes: Optional[int] = None
    iterations: int = 500
    restarts: int = 1
    witnesses: Tuple[WitnessKind, ...] = DEFAULT_WITNESSES
    mub_counts: Tuple[MubCount, ...] = DEFAULT_MUB_COUNTS
    dims: Tuple[int, ...] = DEFAULT_DIMENSIONS
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    output_dir: pathlib.Path = pathlib.Path("results")
    workers: Optional[int] = None
    record_timings: bool = False


def get_config_versions() -> List[str]:
    versions = []
    for schema_dir in sorted(SCHEMAS_DIR.iterdir()):
        if not schema_dir.is_dir():
            continue
        tree = etree.parse(str(schema_dir / "SweepConfig.xsd"))
        root = tree.getroot()
        ns = {"xs": root.nsmap["xs"]}
        versions.extend(
            root.xpath(
                '//xs:simpleType[@name="schemaVersionType"]/xs:restriction/xs:enumeration/@value',
                namespaces=ns,
                smart_strings=False,
            )
        )
    return versions


def _config_error(path, line, message) -> exc.ConfigError:
    return exc.ConfigError(f"{path}:{line}: {message}")


def _parse_document(path: File):
    try:
        doc = objectify.parse(str(path))
    except OSError as err:
        raise exc.ConfigError(f"{path}: cannot read configuration ({err})") from err
    except etree.XMLSyntaxError as err:
        raise _config_error(path, err.lineno, err.msg) from err
    root = doc.getroot()
    version = root.attrib.get("schemaVersion")
    versions = get_config_versions()
    if version not in versions:
        raise _config_error(
            path,
            root.sourceline,
            f"schemaVersion {version} is not valid. Must be one of {', '.join(versions)}.",
        )
    schema_doc = etree.parse(str(SCHEMAS_DIR / f"v{version}" / "SweepConfig.xsd"))
    schema = etree.XMLSchema(schema_doc)
    try:
        schema.assertValid(doc)
    except etree.DocumentInvalid as err:
        entry = err.error_log.last_error
        raise _config_error(path, entry.line, entry.message) from err
    return root


def _fiber(path, el) -> Tuple[FiberSpec, str]:
    label = el.attrib.get("preset", "paper-2m")
    overrides = {}
    for tag, (name, convert) in _FIBER_FIELDS.items():
        child = el.find(tag)
        if child is not None:
            overrides[name] = convert(child.text)
    if overrides:
        label = "custom"
    try:
        return replace(FIBER_PRESETS[el.attrib.get("preset", "paper-2m")], **overrides), label
    except exc.InvalidArgumentError as err:
        raise _config_error(path, el.sourceline, str(err)) from err


def _noise(path, el) -> NoiseModel:
    if el is None:
        return NoiseModel()
    kind = NoiseKind(el.attrib["kind"])
    try:
        if kind is NoiseKind.FIXED:
            if "p" not in el.attrib:
                raise _config_error(path, el.sourceline, "fixed noise needs a p attribute")
            return NoiseModel.fixed(float(el.attrib["p"]))
        if kind is NoiseKind.QUADRATIC:
            if "preset" in el.attrib:
                return NoiseModel.preset(el.attrib["preset"])
            missing = [name for name in ("a", "b", "c") if name not in el.attrib]
            if missing:
                raise _config_error(
                    path,
                    el.sourceline,
                    f"quadratic noise needs a preset or all of a, b, c (missing {', '.join(missing)})",
                )
            return NoiseModel.quadratic(*(float(el.attrib[name]) for name in ("a", "b", "c")))
    except exc.InvalidArgumentError as err:
        raise _config_error(path, el.sourceline, str(err)) from err
    return NoiseModel()


def _mub_counts(path, el) -> Tuple[MubCount, ...]:
    if el is None:
        return DEFAULT_MUB_COUNTS
    counts = []
    for child in el.iterchildren():
        text = str(child.text).strip()
        count = text if text == FULL_MUB_SET else int(text)
        if count != FULL_MUB_SET and count < 2:
            raise _config_error(path, child.sourceline, f"MubCount must be at least 2, got {count}")
        if count in counts:
            raise _config_error(path, child.sourceline, f"MubCount {count} is listed twice")
        counts.append(count)
    return tuple(counts)


def _witnesses(path, el) -> Tuple[WitnessKind, ...]:
    if el is None:
        return DEFAULT_WITNESSES
    kinds = []
    for child in el.iterchildren():
        kind = WitnessKind(str(child.text).strip())
        if kind in kinds:
            raise _config_error(path, child.sourceline, f"Witness {kind.value} is listed twice")
        kinds.append(kind)
    return tuple(kinds)


def _text(el, default=None):
    return default if el is None else str(el.text).strip()


def load_run_config(
    path: File, seed: Optional[int] = None, output_dir: Optional[File] = None
) -> RunConfig:
    """Read and validate a ``SweepConfig`` XML file.

    :param path: configuration file
    :type path: str or pathlib.Path
    :param seed: overrides the file's ``Seed``
    :type seed: int, optional
    :param output_dir: overrides the file's ``OutputDir``
    :type output_dir: str or pathlib.Path, optional
    :return: the validated configuration
    :rtype: RunConfig
    :raises ConfigError: naming the file and line of the first problem
    """
    root = _parse_document(path)
    fiber, label = _fiber(path, root.find("Fiber"))

    estimator_el = root.find("Estimator")
    estimator = TmMethod(_text(estimator_el, TmMethod.SPECTRAL_MEAN.value))
    estimator_attrib = {} if estimator_el is None else estimator_el.attrib

    dims_el = root.find("Dimensions")
    dims = DEFAULT_DIMENSIONS
    if dims_el is not None:
        dims = tuple(sorted({int(child.text) for child in dims_el.iterchildren()}))

    return RunConfig(
        fiber=fiber,
        fiber_label=label,
        estimator=estimator,
        num_probes=int(estimator_attrib["numProbes"]) if "numProbes" in estimator_attrib else None,
        iterations=int(estimator_attrib.get("iterations", RunConfig.iterations)),
        restarts=int(estimator_attrib.get("restarts", RunConfig.restarts)),
        witnesses=_witnesses(path, root.find("Witnesses")),
        mub_counts=_mub_counts(path, root.find("MubCounts")),
        dims=dims,
        noise=_noise(path, root.find("Noise")),
        seed=int(_text(root.find("Seed"), 0)) if seed is None else seed,
        output_dir=pathlib.Path(
            output_dir if output_dir is not None else _text(root.find("OutputDir"), "results")
        ),
        workers=int(_text(root.find("Workers"))) if root.find("Workers") is not None else None,
        record_timings=_text(root.find("RecordTimings"), "false") in ("true", "1"),
    )
