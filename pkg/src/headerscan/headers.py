"""Tolerant RFC 5322 header parsing.

Everything here operates on the header block only (up to the first blank
line).  The parser never rejects input: any byte sequence produces an
EmailHeader, with junk lines tallied in ``malformed_line_count``.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass, field

__all__ = [
    "HeaderField",
    "EmailHeader",
    "ParsedAddress",
    "DateStamp",
    "ReceivedHop",
    "parse_headers",
    "serialize_headers",
    "parse_address_list",
    "parse_date",
    "parse_received",
    "extract_domain",
]


@dataclass(frozen=True)
class HeaderField:
    """One header field: canonical lowercase name, unfolded value, position."""

    name: str
    raw_value: str
    order: int


@dataclass
class EmailHeader:
    fields: list[HeaderField] = field(default_factory=list)
    malformed_line_count: int = 0

    def get(self, name: str) -> str | None:
        """Value of the first field with this (lowercase) name, or None."""
        for f in self.fields:
            if f.name == name:
                return f.raw_value
        return None

    def get_all(self, name: str) -> list[str]:
        return [f.raw_value for f in self.fields if f.name == name]

    def names(self) -> list[str]:
        return [f.name for f in self.fields]


@dataclass(frozen=True)
class ParsedAddress:
    local_part: str
    domain: str
    display_name: str | None = None


@dataclass(frozen=True)
class DateStamp:
    epoch_seconds: int
    utc_offset_minutes: int
    zone_token: str


@dataclass(frozen=True)
class ReceivedHop:
    from_host: str | None = None
    by_host: str | None = None
    with_protocol: str | None = None
    id_token: str | None = None
    for_addr: str | None = None
    ip_literals: tuple[str, ...] = ()
    date: DateStamp | None = None


# Lines may be terminated by CRLF, bare LF, or bare CR.  str.splitlines is
# not used because it also breaks on form feeds and other control
# characters, which must survive inside values byte-for-byte.
_LINE_SPLIT = re.compile(r"\r\n|\r|\n")


def _decode(raw: bytes | str) -> str:
    if isinstance(raw, bytes):
        # 1:1 byte-to-codepoint decode; nothing is ever rejected.
        return raw.decode("latin-1")
    return raw


def parse_headers(raw: bytes | str) -> EmailHeader:
    """Parse the header block of a raw message.

    Continuation lines (leading space/tab) are unfolded into the previous
    field with the fold replaced by a single space.  Lines with no colon,
    an empty field name, or a continuation with nothing to continue are
    counted as malformed and skipped.  Encoded words are left verbatim.
    """
    text = _decode(raw)
    fields: list[HeaderField] = []
    malformed = 0
    cur_name: str | None = None
    cur_value: str | None = None

    def flush() -> None:
        nonlocal cur_name, cur_value
        if cur_name is not None:
            fields.append(
                HeaderField(cur_name, cur_value.strip(" \t"), len(fields))
            )
        cur_name = None
        cur_value = None

    for line in _LINE_SPLIT.split(text):
        if line == "":
            break  # header/body boundary
        if line[0] in " \t":
            if cur_name is None:
                malformed += 1
                continue
            cur_value += " " + line.lstrip(" \t")
            continue
        flush()
        idx = line.find(":")
        name = line[:idx].strip(" \t") if idx >= 0 else ""
        if idx < 0 or not name:
            malformed += 1
            continue
        cur_name = name.lower()
        cur_value = line[idx + 1 :]
    flush()
    return EmailHeader(fields, malformed)


def serialize_headers(header: EmailHeader) -> bytes:
    """Render fields back to wire format.  parse_headers of the result
    reproduces the same fields with zero malformed lines."""
    lines = [f"{f.name}: {f.raw_value}\r\n" for f in header.fields]
    return ("".join(lines) + "\r\n").encode("latin-1")


def _strip_comments(text: str) -> str:
    """Drop parenthesized comments outside quoted strings (nesting honored)."""
    out = []
    depth = 0
    in_quote = False
    i = 0
    while i < len(text):
        c = text[i]
        if in_quote:
            out.append(c)
            if c == "\\" and i + 1 < len(text):
                out.append(text[i + 1])
                i += 2
                continue
            if c == '"':
                in_quote = False
        elif depth > 0:
            if c == "\\" and i + 1 < len(text):
                i += 2
                continue
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
        else:
            if c == '"':
                in_quote = True
                out.append(c)
            elif c == "(":
                depth += 1
            else:
                out.append(c)
        i += 1
    return "".join(out)


def _split_top_level(text: str, seps: str) -> list[str]:
    """Split on separator chars that sit outside quotes and angle brackets."""
    parts = []
    buf = []
    in_quote = False
    angle = 0
    i = 0
    while i < len(text):
        c = text[i]
        if in_quote:
            buf.append(c)
            if c == "\\" and i + 1 < len(text):
                buf.append(text[i + 1])
                i += 2
                continue
            if c == '"':
                in_quote = False
        elif c == '"':
            in_quote = True
            buf.append(c)
        elif c == "<":
            angle += 1
            buf.append(c)
        elif c == ">":
            angle = max(0, angle - 1)
            buf.append(c)
        elif angle == 0 and c in seps:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(c)
        i += 1
    parts.append("".join(buf))
    return parts


def _unquote_display(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        inner = text[1:-1]
        return re.sub(r"\\(.)", r"\1", inner)
    return text


def _parse_addr_spec(text: str) -> tuple[str, str] | None:
    text = text.strip()
    at = text.rfind("@")
    if at <= 0:
        return None
    local = text[:at].strip()
    domain = text[at + 1 :].strip().lower()
    if not local or not domain:
        return None
    if any(c in domain for c in " \t@<>,"):
        return None
    return local, domain


def parse_address_list(raw_value: str) -> list[ParsedAddress]:
    """Parse a To/Cc/From style address list.

    Handles quoted display names, angle-addr, bare addr-spec, and group
    syntax (group members are flattened; an empty group yields nothing).
    Unparseable items are dropped rather than raised.
    """
    text = _strip_comments(raw_value)

    addresses: list[ParsedAddress] = []
    for item in _split_top_level(text, ",;"):
        # Group syntax: drop the "name:" label and keep the members, so
        # "undisclosed-recipients:;" flattens to nothing.  Colons inside
        # quotes and angle brackets are protected by the splitter.
        item = _split_top_level(item, ":")[-1].strip()
        if not item:
            continue
        lt = item.rfind("<")
        if lt >= 0:
            gt = item.find(">", lt)
            inner = item[lt + 1 :] if gt < 0 else item[lt + 1 : gt]
            # Drop an obsolete source route ("@a,@b:user@c") if present;
            # routes always start with '@'.
            if inner.lstrip().startswith("@") and ":" in inner:
                inner = inner[inner.rfind(":") + 1 :]
            spec = _parse_addr_spec(inner)
            if spec is None:
                continue
            display = _unquote_display(item[:lt]) or None
            addresses.append(ParsedAddress(spec[0], spec[1], display))
        else:
            spec = _parse_addr_spec(item)
            if spec is None:
                continue
            addresses.append(ParsedAddress(spec[0], spec[1], None))
    return addresses


# RFC 5322 obsolete named zones and their fixed offsets (minutes).
_NAMED_ZONES = {
    "UT": 0,
    "GMT": 0,
    "EST": -5 * 60,
    "EDT": -4 * 60,
    "CST": -6 * 60,
    "CDT": -5 * 60,
    "MST": -7 * 60,
    "MDT": -6 * 60,
    "PST": -8 * 60,
    "PDT": -7 * 60,
}

_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}

_DATE_RE = re.compile(
    r"^(?:[A-Za-z]{2,10}\s*,\s*)?"
    r"(\d{1,2})\s+([A-Za-z]{3,10})\.?\s+(\d{2,4})\s+"
    r"(\d{1,2}):(\d{1,2})(?::(\d{1,2}))?\s+"
    r"([+-]\d{4}|[A-Za-z]{1,5})$"
)


def parse_date(raw_value: str) -> DateStamp | None:
    """Parse an RFC 5322 date-time, including obsolete forms.

    Named zones from the obsolete-zone table map to their fixed offsets;
    any other alphabetic zone parses with offset 0 and the token kept
    verbatim.  Returns None when the value is not a date.
    """
    text = _strip_comments(raw_value).strip()
    text = re.sub(r"\s+", " ", text)
    m = _DATE_RE.match(text)
    if m is None:
        return None
    day = int(m.group(1))
    month = _MONTHS.get(m.group(2)[:3].lower())
    if month is None:
        return None
    year = int(m.group(3))
    if len(m.group(3)) == 2:
        year += 2000 if year < 50 else 1900
    elif len(m.group(3)) == 3:
        year += 1900
    hour, minute = int(m.group(4)), int(m.group(5))
    second = int(m.group(6)) if m.group(6) else 0
    zone = m.group(7)
    if not (1 <= day <= 31 and hour <= 23 and minute <= 59 and second <= 60):
        return None
    if zone[0] in "+-":
        offset = int(zone[1:3]) * 60 + int(zone[3:5])
        if zone[0] == "-":
            offset = -offset
    else:
        offset = _NAMED_ZONES.get(zone.upper(), 0)
    epoch = calendar.timegm((year, month, day, hour, minute, second, 0, 0, 0))
    return DateStamp(epoch - offset * 60, offset, zone)


_RECEIVED_KEYWORDS = {"from", "by", "via", "with", "id", "for"}
_IP_LITERAL = re.compile(r"\[(?:[Ii][Pp][vV]6:)?([0-9A-Fa-f:.]+)\]")


def _looks_like_ip(token: str) -> bool:
    if ":" in token:
        return True
    return bool(re.fullmatch(r"(?:\d{1,3}\.){3}\d{1,3}", token))


def parse_received(raw_value: str) -> ReceivedHop:
    """Best-effort parse of one Received field.

    The clause keywords from/by/via/with/id/for anchor the scan; a clause
    holds the first token after its keyword.  Comments are skipped, except
    that bracketed IP literals anywhere in the value are harvested.  The
    text after the final ';' is the date clause.
    """
    ips = tuple(
        m.group(1) for m in _IP_LITERAL.finditer(raw_value)
        if _looks_like_ip(m.group(1))
    )

    date = None
    body = raw_value
    semi = raw_value.rfind(";")
    if semi >= 0:
        date = parse_date(raw_value[semi + 1 :])
        body = raw_value[:semi]

    clauses: dict[str, str] = {}
    current: str | None = None
    for token in _strip_comments(body).split():
        low = token.lower()
        if low in _RECEIVED_KEYWORDS:
            current = low
            continue
        if current is not None and current not in clauses:
            clauses[current] = token
        current = None

    for_value = clauses.get("for")
    if for_value is not None:
        for_value = for_value.strip("<>") or None
    return ReceivedHop(
        from_host=clauses.get("from"),
        by_host=clauses.get("by"),
        with_protocol=clauses.get("with"),
        id_token=clauses.get("id"),
        for_addr=for_value,
        ip_literals=ips,
        date=date,
    )


def extract_domain(header: EmailHeader, field_name: str) -> str | None:
    """Domain carried by a named field, lowercased.

    For message-id the domain is the part after the last '@' inside the
    angle brackets; for address fields it is the first address's domain.
    Returns None when the field is absent or carries no domain.
    """
    value = header.get(field_name)
    if value is None:
        return None
    if field_name == "message-id":
        m = re.search(r"<([^<>]*)>", value)
        inner = m.group(1) if m else value.strip()
        at = inner.rfind("@")
        if at < 0:
            return None
        domain = inner[at + 1 :].strip().lower()
        return domain or None
    addresses = parse_address_list(value)
    if not addresses:
        return None
    return addresses[0].domain or None
