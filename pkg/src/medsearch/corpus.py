"""Reading CLEF eHealth ``.dat`` corpus files and pulling text out of their HTML."""

from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path
from typing import BinaryIO, Callable, Iterable, Iterator

log = logging.getLogger(__name__)

_HEADERS = (b"#UID:", b"#DATE:", b"#URL:", b"#CONTENT:")
_EOF = b"#EOF"


class MalformedRecord(ValueError):
    def __init__(self, message: str, offset: int, last_good_uid: str | None):
        super().__init__(f"{message} at byte {offset} (last good record: {last_good_uid or '-'})")
        self.offset = offset
        self.last_good_uid = last_good_uid


@dataclass(frozen=True)
class RawDocument:
    uid: str
    date: str
    url: str
    raw_content: str
    offset: int = 0
    source: str = ""


@dataclass(frozen=True)
class Document:
    uid: str
    url: str
    text: str


def _decode(b: bytes) -> str:
    return b.decode("utf-8", errors="replace")


def _header_value(line: bytes, marker: bytes) -> str:
    return _decode(line[len(marker):].rstrip(b"\r\n")).strip()


def iter_corpus_records(
    stream: BinaryIO | bytes,
    on_error: Callable[[MalformedRecord], None] | None = None,
    source: str = "",
) -> Iterator[RawDocument]:
    """Yield records in file order.

    Malformed records are passed to ``on_error`` (logged by default) and
    skipped; parsing resumes at the next ``#UID:`` line.
    """
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    report = on_error or (lambda err: log.warning("%s: %s", source or "<stream>", err))

    last_good: str | None = None
    state = "seek"  # seek -> headers -> content
    fields: dict[str, str] = {}
    start = 0
    content_start = 0
    expected = 0

    pos = 0
    for line in io.BytesIO(data):
        line_start = pos
        pos += len(line)
        bare = line.rstrip(b"\r\n")

        if bare.startswith(b"#UID:"):
            if state in ("headers", "content"):
                report(MalformedRecord("record not terminated by #EOF", start, last_good))
            state = "headers"
            start = line_start
            fields = {"uid": _header_value(line, b"#UID:")}
            expected = 1
            continue

        if state == "seek":
            if bare.strip():
                report(MalformedRecord("data outside a record", line_start, last_good))
                state = "skip"
            continue
        if state == "skip":
            continue

        if state == "headers":
            marker = _HEADERS[expected]
            if bare.startswith(marker):
                if marker == b"#CONTENT:":
                    state = "content"
                    content_start = line_start + len(marker)
                else:
                    fields[marker[1:-1].decode().lower()] = _header_value(line, marker)
                    expected += 1
                continue
            report(MalformedRecord(f"expected {marker.decode()} header", line_start, last_good))
            state = "skip"
            continue

        # content
        if bare == _EOF:
            raw = _decode(data[content_start:line_start])
            state = "seek"
            if not fields["uid"]:
                report(MalformedRecord("empty #UID", start, last_good))
                continue
            doc = RawDocument(
                uid=fields["uid"],
                date=fields.get("date", ""),
                url=fields.get("url", ""),
                raw_content=raw,
                offset=start,
                source=source,
            )
            last_good = doc.uid
            yield doc

    if state in ("headers", "content"):
        report(MalformedRecord("missing #EOF before end of stream", start, last_good))


def parse_corpus_file(
    stream: BinaryIO | bytes,
    on_error: Callable[[MalformedRecord], None] | None = None,
    source: str = "",
) -> list[RawDocument]:
    return list(iter_corpus_records(stream, on_error, source))


_SKIP_TAGS = frozenset({"script", "style", "noscript", "template"})
_BLOCK_TAGS = frozenset(
    """address article aside blockquote body br dd div dl dt fieldset figcaption
    figure footer form h1 h2 h3 h4 h5 h6 head header hr html li main nav ol option
    p pre section table tbody td tfoot th thead title tr ul""".split()
)
_TAGLIKE = re.compile(r"<(?=[a-zA-Z/!])")


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append(" ")

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self.parts.append(" ")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag in _BLOCK_TAGS:
            self.parts.append(" ")

    def handle_data(self, data):
        if not self._skip_depth:
            self.parts.append(data)


def html_to_text(html: str) -> str:
    """Visible text of ``html`` with whitespace collapsed. Never raises."""
    if "<" not in html:
        return " ".join(html.split())
    parser = _TextExtractor()
    try:
        parser.feed(html)
        parser.close()
    except Exception:  # html.parser is lenient, but stay total regardless
        log.debug("html parser gave up; keeping partial text", exc_info=True)
    text = " ".join("".join(parser.parts).split())
    # Decoded entities such as "&lt;b" must not read as markup.
    return _TAGLIKE.sub("< ", text)


def extract_text(raw: RawDocument) -> Document:
    return Document(uid=raw.uid, url=raw.url, text=html_to_text(raw.raw_content))


def _expand_paths(paths: Iterable[str | Path]) -> list[Path]:
    files: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(f for f in p.rglob("*") if f.is_file() and not f.name.startswith("."))
        elif p.is_file():
            files.append(p)
        else:
            raise FileNotFoundError(f"corpus path not found: {p}")
    return sorted(set(files), key=lambda f: str(f))


def load_corpus(
    paths: Iterable[str | Path],
    on_error: Callable[[MalformedRecord], None] | None = None,
) -> list[Document]:
    """Parse every corpus file (directories are walked) and extract text.

    Files are read in lexicographic path order. A repeated uid keeps the
    first record and logs both locations.
    """
    seen: dict[str, tuple[str, int]] = {}
    docs: list[Document] = []
    for path in _expand_paths(paths):
        with open(path, "rb") as fh:
            for raw in iter_corpus_records(fh, on_error, source=str(path)):
                if raw.uid in seen:
                    first_src, first_off = seen[raw.uid]
                    log.warning(
                        "duplicate uid %s at %s:%d (first at %s:%d); keeping first",
                        raw.uid, path, raw.offset, first_src, first_off,
                    )
                    continue
                seen[raw.uid] = (str(path), raw.offset)
                docs.append(extract_text(raw))
    return docs
