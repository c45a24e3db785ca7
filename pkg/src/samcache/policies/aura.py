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
"""the AURA policy and its ablations"""

import dataclasses

from .. import aura, signals
from .base import PolicyBase

_SIGNAL_FIELDS = {f.name: f.default for f in dataclasses.fields(signals.SignalParams)}
_AURA_FIELDS = {
    f.name: f.default
    for f in dataclasses.fields(aura.AuraParams)
    if f.name != "signal_params"
}


class Aura(PolicyBase):
    """dual-factor scoring with an adaptive active set and momentum

    Any AuraParams or SignalParams field can be given as a parameter.
    Subclasses pin ablation flags in `ablation`, which parameters can't
    override.
    """

    defaults = {**_AURA_FIELDS, **_SIGNAL_FIELDS}
    ablation = {}

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        merged = {**self.params, **self.ablation}
        signal_params = signals.SignalParams(
            **{key: merged[key] for key in _SIGNAL_FIELDS}
        )
        self.aura_params = aura.AuraParams(
            signal_params=signal_params, **{key: merged[key] for key in _AURA_FIELDS}
        )
        self.state = aura.CoordinatorState.create(scenario.pool, self.aura_params)

    @property
    def pool(self):
        return self.state.pool

    def decide(self, observations, current, cycle):
        return aura.run_decision_cycle(self.state, observations, current)


class AuraUndamped(Aura):
    """AURA without momentum inertia or the significance gate"""

    ablation = {"beta_momentum": 1.0, "gate_frac": 0.0}


class B3PureElastic(Aura):
    """AURA with the whole budget elastic, no fixed pool"""

    ablation = {"disable_fixed_pool": True}


class B8EfficiencyOnly(Aura):
    """AURA scoring on historical efficiency H alone"""

    ablation = {"disable_v": True}


class B9ReactiveH(Aura):
    """AURA with H built from the fast ops EMA"""

    ablation = {"fast_h": True}


class B10PotentialOnly(Aura):
    """AURA scoring on marginal potential V alone"""

    ablation = {"disable_h": True}
