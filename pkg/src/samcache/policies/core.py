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
"""the online Frank-Wolfe policy"""

from .. import core
from ..domain import DecisionInfo, project_to_feasible
from .base import PolicyBase


class SamCore(PolicyBase):
    """online Frank-Wolfe with a finite-difference gradient, no heuristics"""

    defaults = {"fd_radius": 8}

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        self.state = core.CoreState.create(scenario.pool, self.params["fd_radius"])

    def initial_plan(self):
        return project_to_feasible(self.state.x, self.pool)

    def decide(self, observations, current, cycle):
        gradient = core.stochastic_gradient(self.state, observations)
        plan = core.ofw_step(self.state, gradient, self.pool)
        if plan == current:
            plan = core.perturb(self.state, plan)
        n = self.pool.n_tenants
        return plan, DecisionInfo(global_scan=True, active_size=n, touched=n)
