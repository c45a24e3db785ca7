#
# Copyright (c) 2025 samcache developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in
# all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
# THE SOFTWARE.
#
"""Filter functions for jinja"""

import re

from .exceptions import SamSyntaxError

PAGE_SIZE = 4096

UNITS = {
    "": 1,
    "b": 1,
    "kb": 1000,
    "kib": 1024,
    "mb": 1000**2,
    "mib": 1024**2,
    "gb": 1000**3,
    "gib": 1024**3,
}


def jinja_filters():
    """return a dictionary of all the filters

    suitable for use by:

    env = jinja2.Environment()
    env.filters = jinja_filters()
    """
    filters = {}
    filters["pages"] = pages
    filters["pct"] = pct
    return filters


def pages(value, page_size=PAGE_SIZE):
    """convert a size like '2MB', '512KiB' or a byte count into whole pages"""
    if isinstance(value, int | float):
        size = float(value)
    else:
        match = re.fullmatch(r"\s*([\d.]+)\s*([A-Za-z]*)\s*", str(value))
        if not match:
            raise SamSyntaxError(f"'{value}' is not a size")
        try:
            size = float(match.group(1)) * UNITS[match.group(2).lower()]
        except (KeyError, ValueError) as exc:
            raise SamSyntaxError(f"'{value}' is not a size") from exc
    if page_size <= 0:
        raise SamSyntaxError("page size must be greater than 0")
    return int(size // page_size)


def pct(value, digits=1):
    """format a ratio as a percentage, 0.125 -> '12.5%'"""
    try:
        return f"{float(value) * 100:.{digits}f}%"
    except (TypeError, ValueError):
        # not a number, no-op
        return value
