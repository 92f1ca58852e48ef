"""URL to base-domain normalization backed by a pinned public-suffix snapshot.

The snapshot lives in ``netmap/data/public_suffix_list.dat``; its VERSION line
is reported by :func:`psl_version`. Nothing is fetched at runtime.
"""

from __future__ import annotations

import ipaddress
import re
from functools import lru_cache
from importlib import resources
from urllib.parse import urlsplit

from .errors import DomainError

_LABEL = re.compile(r"^(?:[a-z0-9_](?:[a-z0-9_-]*[a-z0-9_])?|[^\x00-\x7f].*)$")


class SuffixList:
    """Public-suffix rule matcher (plain, wildcard and exception rules)."""

    def __init__(self, lines):
        self.rules: set[str] = set()
        self.wildcards: set[str] = set()
        self.exceptions: set[str] = set()
        self.version = None
        for raw in lines:
            line = raw.strip()
            if line.startswith("// VERSION:"):
                self.version = line.split(":", 1)[1].strip()
            if not line or line.startswith("//"):
                continue
            rule = line.split()[0].lower()
            if rule.startswith("!"):
                self.exceptions.add(rule[1:])
            elif rule.startswith("*."):
                self.wildcards.add(rule[2:])
            else:
                self.rules.add(rule)

    def public_suffix(self, host: str) -> str:
        labels = host.split(".")
        # longest matching rule wins; unlisted TLDs fall back to the implicit "*" rule
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self.exceptions:
                return ".".join(labels[i + 1:])
            if candidate in self.rules:
                return candidate
            parent = ".".join(labels[i + 1:])
            if i + 1 < len(labels) and parent in self.wildcards:
                return candidate
        return labels[-1]

    def registrable_domain(self, host: str) -> str | None:
        suffix = self.public_suffix(host)
        if host == suffix:
            return None
        head = host[: -len(suffix) - 1]
        return head.rsplit(".", 1)[-1] + "." + suffix


@lru_cache(maxsize=1)
def suffix_list() -> SuffixList:
    text = resources.files("netmap").joinpath("data/public_suffix_list.dat").read_text(encoding="utf-8")
    return SuffixList(text.splitlines())


def psl_version() -> str | None:
    return suffix_list().version


def _is_ip(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
    except ValueError:
        return False
    return True


def _host_of(raw: str) -> str:
    text = raw.strip()
    if not text:
        raise DomainError(raw, "empty string")
    if "://" not in text and not text.startswith("//"):
        text = "//" + text
    try:
        parts = urlsplit(text)
        host = parts.hostname
        parts.port  # noqa: B018 - raises on a malformed port
    except ValueError as exc:
        raise DomainError(raw, str(exc)) from None
    if not host:
        raise DomainError(raw, "no host component")
    host = host.rstrip(".")
    if _is_ip(host.strip("[]")):
        return host.strip("[]")
    labels = host.split(".")
    if any(not label or not _LABEL.match(label) for label in labels):
        raise DomainError(raw, f"invalid host {host!r}")
    return host


def registrable_domain(url_or_host: str) -> str:
    """The registrable domain (public suffix plus one label) of a URL or host."""
    host = _host_of(url_or_host)
    if _is_ip(host):
        return host
    reg = suffix_list().registrable_domain(host)
    if reg is None:
        raise DomainError(url_or_host, f"{host!r} is a public suffix")
    return reg


def normalize_domain(url: str) -> str:
    """Lowercase host of ``url`` with scheme, port, path and leading
    ``www.`` labels removed. Other subdomains are kept.

    >>> normalize_domain("https://www.veteranstoday.com/2017/a-post")
    'veteranstoday.com'
    """
    host = _host_of(url)
    if _is_ip(host):
        return host
    psl = suffix_list()
    if psl.registrable_domain(host) is None:
        raise DomainError(url, f"{host!r} is a public suffix")
    # every leading www label goes, so normalizing twice changes nothing
    while host.startswith("www."):
        rest = host[4:]
        if psl.registrable_domain(rest) is None:
            break
        host = rest
    return host


def domain_ancestors(domain: str) -> list[str]:
    """``domain`` and its parents down to the registrable domain, most specific first."""
    if _is_ip(domain):
        return [domain]
    reg = suffix_list().registrable_domain(domain)
    if reg is None:
        return [domain]
    out = [domain]
    while out[-1] != reg:
        out.append(out[-1].split(".", 1)[1])
    return out
