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
# pylint: disable=protected-access, missing-function-docstring, redefined-outer-name
# pylint: disable=missing-module-docstring, unused-variable
"""test all the jinja filters

test all the filters for functionality and that the list of all filters
has everything in it
"""

import jinja2
import pytest

from samcache import SamSyntaxError
from samcache.filters import jinja_filters, pages, pct

#
# jinja_filters()
#
ALL_FILTERS = ["pages", "pct"]


def test_filter_list():
    # no extras either, so a new filter prompts a new test
    assert sorted(jinja_filters()) == sorted(ALL_FILTERS)


TEMPLATES = [
    # pages
    ("{{ '2MiB' | pages }}", "512"),
    ("{{ '4KiB' | pages }}", "1"),
    ("{{ '1GB' | pages }}", "244140"),
    ("{{ 8192 | pages }}", "2"),
    ("{{ '8 kib' | pages }}", "2"),
    ("{{ '1MiB' | pages(512) }}", "2048"),
    ("{{ 100 | pages }}", "0"),
    # pct
    ("{{ 0.125 | pct }}", "12.5%"),
    ("{{ 1 | pct }}", "100.0%"),
    ("{{ 0.3333 | pct(2) }}", "33.33%"),
    ("{{ 'hello' | pct }}", "hello"),
]


@pytest.mark.parametrize("template, rendered", TEMPLATES)
def test_filters(template, rendered):
    env = jinja2.Environment()
    env.filters = jinja_filters()
    assert env.from_string(template).render() == rendered


BAD_SIZES = ["lots", "2 parsecs", "1.2.3MB", ""]


@pytest.mark.parametrize("value", BAD_SIZES)
def test_pages_bad_size(value):
    with pytest.raises(SamSyntaxError):
        pages(value)


def test_pages_bad_page_size():
    with pytest.raises(SamSyntaxError):
        pages("1MB", page_size=0)


def test_pct_none():
    assert pct(None) is None
