"""SemVer 2.0.0 versions and the npm range dialect used in ``package.json``.

Ranges are desugared the way the npm client does it: carets, tildes,
hyphen ranges and x-ranges all become plain comparator sets, so a parsed
range is a disjunction of conjunctions of ``(operator, Version)`` pairs.

    >>> RangeConstraint.parse("^1.2.x")
    RangeConstraint('>=1.2.0 <2.0.0-0')
    >>> range_satisfies(RangeConstraint.parse("^1.2.0"), Version.parse("1.9.9"))
    True
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional

__all__ = [
    "Version",
    "RangeConstraint",
    "VersionParseError",
    "RangeParseError",
    "version_compare",
    "range_satisfies",
    "normalize_version",
]


class VersionParseError(ValueError):
    pass


class RangeParseError(ValueError):
    pass


_NUM = r"0|[1-9]\d*"
_PRE_ID = r"(?:0|[1-9]\d*|\d*[a-zA-Z-][a-zA-Z0-9-]*)"
_PRERELEASE = rf"(?:-({_PRE_ID}(?:\.{_PRE_ID})*))"
_BUILD = r"(?:\+([0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))"
_FULLPLAIN = rf"v?({_NUM})\.({_NUM})\.({_NUM}){_PRERELEASE}?{_BUILD}?"

_VERSION_RE = re.compile(rf"^{_FULLPLAIN}$")
_COMPARATOR_RE = re.compile(rf"^((?:<|>)?=?)\s*({_FULLPLAIN})$")

_XID = r"0|[1-9]\d*|x|X|\*"
_XRANGE_PLAIN = (
    rf"[v=\s]*({_XID})(?:\.({_XID})(?:\.({_XID})(?:{_PRERELEASE})?{_BUILD}?)?)?"
)
_XRANGE_RE = re.compile(rf"^((?:<|>)?=?)\s*{_XRANGE_PLAIN}$")
_TILDE_RE = re.compile(rf"^(?:~>?){_XRANGE_PLAIN}$")
_CARET_RE = re.compile(rf"^\^{_XRANGE_PLAIN}$")
_HYPHEN_RE = re.compile(rf"^\s*({_XRANGE_PLAIN})\s+-\s+({_XRANGE_PLAIN})\s*$")

_COMPARATOR_TRIM = re.compile(
    rf"(\s*)((?:<|>)?=?)\s*({_FULLPLAIN}|{_XRANGE_PLAIN})"
)
_TILDE_TRIM = re.compile(r"(\s*)~>?\s+")
_CARET_TRIM = re.compile(r"(\s*)\^\s+")
_STAR_RE = re.compile(r"(<|>)?=?\s*\*")

# Lenient form for legacy release versions: "v1", "1.2", "=1.2.3".
_LEGACY_RE = re.compile(
    r"^[=v\s]*(\d+)(?:\.(\d+)(?:\.(\d+))?)?"
    rf"(?:-?({_PRE_ID}(?:\.{_PRE_ID})*))?{_BUILD}?$"
)


def _prerelease_key(ident: str) -> tuple[int, int | str]:
    # Numeric identifiers always sort below alphanumeric ones.
    if ident.isdigit():
        return (0, int(ident))
    return (1, ident)


@functools.total_ordering
@dataclass(frozen=True)
class Version:
    """A SemVer 2.0.0 version. Build metadata is kept but never compared."""

    major: int
    minor: int
    patch: int
    prerelease: tuple[str, ...] = ()
    build: str = field(default="", compare=False)

    @classmethod
    def parse(cls, text: str) -> "Version":
        m = _VERSION_RE.match(text.strip())
        if m is None:
            raise VersionParseError(f"invalid version: {text!r}")
        return cls._from_match(m.groups())

    @classmethod
    def _from_match(cls, groups: tuple) -> "Version":
        major, minor, patch, pre, build = groups
        return cls(
            int(major),
            int(minor),
            int(patch),
            tuple(pre.split(".")) if pre else (),
            build or "",
        )

    @property
    def sort_key(self) -> tuple:
        pre = tuple(_prerelease_key(i) for i in self.prerelease)
        return (self.major, self.minor, self.patch, 0 if pre else 1, pre)

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.major, self.minor, self.patch)

    def __lt__(self, other: "Version") -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        text = f"{self.major}.{self.minor}.{self.patch}"
        if self.prerelease:
            text += "-" + ".".join(self.prerelease)
        return text

    def __repr__(self) -> str:
        return f"Version({str(self)!r})"


def normalize_version(text: str) -> Optional[Version]:
    """Parse a release version, tolerating legacy npm spellings.

    Strict SemVer is tried first; otherwise a leading ``v``/``=`` is stripped
    and missing minor/patch parts are filled with zero. Returns ``None`` when
    the string still cannot be read as a version.
    """
    try:
        return Version.parse(text)
    except VersionParseError:
        pass
    m = _LEGACY_RE.match(text.strip())
    if m is None:
        return None
    major, minor, patch, pre, build = m.groups()
    return Version(
        int(major),
        int(minor or 0),
        int(patch or 0),
        tuple(pre.split(".")) if pre else (),
        build or "",
    )


def version_compare(a: Version, b: Version) -> Literal[-1, 0, 1]:
    ka, kb = a.sort_key, b.sort_key
    return (ka > kb) - (ka < kb)  # type: ignore[return-value]


Operator = Literal["", "<", "<=", ">", ">="]


@dataclass(frozen=True)
class Comparator:
    op: Operator
    version: Optional[Version]  # None means "any"

    def test(self, v: Version) -> bool:
        if self.version is None:
            return True
        c = version_compare(v, self.version)
        if self.op == "":
            return c == 0
        if self.op == "<":
            return c < 0
        if self.op == "<=":
            return c <= 0
        if self.op == ">":
            return c > 0
        return c >= 0

    def __str__(self) -> str:
        if self.version is None:
            return "*"
        return f"{self.op}{self.version}"


_ANY = Comparator("", None)
_NULL = "<0.0.0-0"


def _is_x(ident: Optional[str]) -> bool:
    return not ident or ident.lower() == "x" or ident == "*"


def _hyphen_replace(m: re.Match) -> str:
    (frm, f_maj, f_min, f_pat, _fpr, _fb,
     to, t_maj, t_min, t_pat, t_pre, _tb) = m.groups()
    if _is_x(f_maj):
        lo = ""
    elif _is_x(f_min):
        lo = f">={f_maj}.0.0"
    elif _is_x(f_pat):
        lo = f">={f_maj}.{f_min}.0"
    else:
        lo = f">={frm}"

    if _is_x(t_maj):
        hi = ""
    elif _is_x(t_min):
        hi = f"<{int(t_maj) + 1}.0.0-0"
    elif _is_x(t_pat):
        hi = f"<{t_maj}.{int(t_min) + 1}.0-0"
    elif t_pre:
        hi = f"<={t_maj}.{t_min}.{t_pat}-{t_pre}"
    else:
        hi = f"<={to}"
    return f"{lo} {hi}".strip()


def _replace_tilde(comp: str) -> str:
    m = _TILDE_RE.match(comp)
    if m is None:
        return comp
    major, minor, patch, pre, _build = m.groups()
    if _is_x(major):
        return ""
    if _is_x(minor):
        return f">={major}.0.0 <{int(major) + 1}.0.0-0"
    if _is_x(patch):
        return f">={major}.{minor}.0 <{major}.{int(minor) + 1}.0-0"
    if pre:
        return f">={major}.{minor}.{patch}-{pre} <{major}.{int(minor) + 1}.0-0"
    return f">={major}.{minor}.{patch} <{major}.{int(minor) + 1}.0-0"


def _replace_caret(comp: str) -> str:
    m = _CARET_RE.match(comp)
    if m is None:
        return comp
    major, minor, patch, pre, _build = m.groups()
    if _is_x(major):
        return ""
    if _is_x(minor):
        return f">={major}.0.0 <{int(major) + 1}.0.0-0"
    if _is_x(patch):
        if major == "0":
            return f">={major}.{minor}.0 <{major}.{int(minor) + 1}.0-0"
        return f">={major}.{minor}.0 <{int(major) + 1}.0.0-0"
    lo = f">={major}.{minor}.{patch}" + (f"-{pre}" if pre else "")
    if major == "0":
        if minor == "0":
            return f"{lo} <{major}.{minor}.{int(patch) + 1}-0"
        return f"{lo} <{major}.{int(minor) + 1}.0-0"
    return f"{lo} <{int(major) + 1}.0.0-0"


def _replace_xrange(comp: str) -> str:
    comp = comp.strip()
    m = _XRANGE_RE.match(comp)
    if m is None:
        return comp
    gtlt, major, minor, patch, _pre, _build = m.groups()
    x_major = _is_x(major)
    x_minor = x_major or _is_x(minor)
    x_patch = x_minor or _is_x(patch)
    if gtlt == "=" and x_patch:
        gtlt = ""
    if x_major:
        return _NULL if gtlt in ("<", ">") else "*"
    if gtlt and x_patch:
        maj = int(major)
        mnr = 0 if x_minor else int(minor)
        pat = 0
        suffix = ""
        if gtlt == ">":
            gtlt = ">="
            if x_minor:
                maj, mnr = maj + 1, 0
            else:
                mnr += 1
        elif gtlt == "<=":
            gtlt = "<"
            if x_minor:
                maj += 1
            else:
                mnr += 1
        if gtlt == "<":
            suffix = "-0"
        return f"{gtlt}{maj}.{mnr}.{pat}{suffix}"
    if x_minor:
        return f">={major}.0.0 <{int(major) + 1}.0.0-0"
    if x_patch:
        return f">={major}.{minor}.0 <{major}.{int(minor) + 1}.0-0"
    return comp


def _each(comp: str, fn) -> str:
    return " ".join(fn(c) for c in comp.strip().split())


def _desugar(comp: str) -> str:
    comp = _each(comp, _replace_caret)
    comp = _each(comp, _replace_tilde)
    comp = _each(comp, _replace_xrange)
    return _STAR_RE.sub("", comp.strip())


def _parse_comparator(text: str) -> Comparator:
    if text in ("", ">=0.0.0", ">=0.0.0-0"):
        return _ANY
    m = _COMPARATOR_RE.match(text)
    if m is None:
        raise RangeParseError(f"invalid comparator: {text!r}")
    op = m.group(1)
    version = Version._from_match(m.groups()[2:])
    return Comparator("" if op == "=" else op, version)  # type: ignore[arg-type]


def _parse_set(text: str) -> tuple[Comparator, ...]:
    text = text.strip()
    text = _HYPHEN_RE.sub(_hyphen_replace, text)
    text = _COMPARATOR_TRIM.sub(lambda m: m.group(1) + m.group(2) + m.group(3), text)
    text = _TILDE_TRIM.sub(lambda m: m.group(1) + "~", text)
    text = _CARET_TRIM.sub(lambda m: m.group(1) + "^", text)
    expanded = " ".join(_desugar(c) for c in text.split(" "))
    comparators: dict[str, Comparator] = {}
    for part in re.split(r"\s+", expanded):
        comp = _parse_comparator(part)
        if str(comp) == _NULL:
            return (comp,)
        comparators.setdefault(str(comp), comp)
    if len(comparators) > 1:
        comparators.pop("*", None)
    return tuple(comparators.values())


def _is_null_set(comps: tuple[Comparator, ...]) -> bool:
    return str(comps[0]) == _NULL


@dataclass(frozen=True)
class RangeConstraint:
    """A parsed npm version range: OR of AND-ed comparators.

    ``raw`` keeps the text the range was parsed from and does not take part
    in equality; two ranges are equal when their desugared sets are.
    """

    sets: tuple[tuple[Comparator, ...], ...]
    raw: str = field(default="*", compare=False)

    @classmethod
    def parse(cls, text: str) -> "RangeConstraint":
        return _parse_range(text)

    @classmethod
    def any(cls, raw: str = "*") -> "RangeConstraint":
        return cls(((_ANY,),), raw)

    @classmethod
    def exact(cls, v: Version) -> "RangeConstraint":
        return cls(((Comparator("", v),),), str(v))

    @property
    def is_any(self) -> bool:
        return self.sets == ((_ANY,),)

    def satisfied_by(self, v: Version) -> bool:
        return any(_test_set(s, v) for s in self.sets)

    def filter(self, versions: Iterable[Version]) -> list[Version]:
        return [v for v in versions if self.satisfied_by(v)]

    def __str__(self) -> str:
        return " || ".join(" ".join(str(c) for c in s) for s in self.sets)

    def __repr__(self) -> str:
        return f"RangeConstraint({str(self)!r})"


@functools.lru_cache(maxsize=65536)
def _parse_range(text: str) -> RangeConstraint:
    if not isinstance(text, str):
        raise RangeParseError(f"range must be a string, got {type(text).__name__}")
    sets = [_parse_set(part) for part in re.split(r"\s*\|\|\s*", text.strip())]
    if len(sets) > 1:
        first = sets[0]
        sets = [s for s in sets if not _is_null_set(s)] or [first]
        for s in sets:
            if s == (_ANY,):
                sets = [s]
                break
    return RangeConstraint(tuple(sets), text)


def _test_set(comps: tuple[Comparator, ...], v: Version) -> bool:
    if not all(c.test(v) for c in comps):
        return False
    if v.prerelease:
        # A prerelease only matches when the set names a prerelease of the
        # same major.minor.patch.
        return any(
            c.version is not None and c.version.prerelease and c.version.triple == v.triple
            for c in comps
        )
    return True


def range_satisfies(r: RangeConstraint, v: Version) -> bool:
    return r.satisfied_by(v)
