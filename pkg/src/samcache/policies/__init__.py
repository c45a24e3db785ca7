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
"""policy implementations and their base classes

When you add a policy class, you must add it here
"""

from .aura import (
    Aura,
    AuraUndamped,
    B3PureElastic,
    B8EfficiencyOnly,
    B9ReactiveH,
    B10PotentialOnly,
)
from .base import PolicyBase, StaticPolicy
from .baselines import (
    B1StaticAverage,
    B2FixedPriority,
    B4IndividualOpt,
    B5GlobalLruProxy,
    B6DatasizeProp,
    B7DynamicNeed,
    B11Regression,
    B12SlaDriven,
    B13Ucp,
    B14HindsightOpt,
)
from .core import SamCore

__all__ = [
    "PolicyBase",
    "StaticPolicy",
    "Aura",
    "AuraUndamped",
    "SamCore",
    "B1StaticAverage",
    "B2FixedPriority",
    "B3PureElastic",
    "B4IndividualOpt",
    "B5GlobalLruProxy",
    "B6DatasizeProp",
    "B7DynamicNeed",
    "B8EfficiencyOnly",
    "B9ReactiveH",
    "B10PotentialOnly",
    "B11Regression",
    "B12SlaDriven",
    "B13Ucp",
    "B14HindsightOpt",
]
