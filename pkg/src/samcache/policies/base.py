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
"""base class for all allocation policies"""

import abc
import re

from ..domain import DecisionInfo, allocate_slack
from ..exceptions import SamError


class PolicyBase(abc.ABC):
    """Abstract Base Class for all policies

    Subclass and implement `decide()`. The first line of the class docstring
    is displayed by `sam policies` as the description of the policy

    Creates a registry of all subclasses in cls.classmap

    The string to use in an experiment file is the underscored class name,
    ie:

    Aura -> aura
    B7DynamicNeed -> b7_dynamic_need

    Numbered baselines can also be referred to by their number alone, ie
    `b7`.

    Intermediate bases pass `register=False`. Subclasses declare their
    tunables and defaults in `defaults`. A policy whose plans may ignore the
    lower bounds sets `enforces_bounds = False`.
    """

    classmap = {}
    defaults = {}
    enforces_bounds = True
    note = ""

    @classmethod
    def __init_subclass__(cls, register=True, **kwargs):
        super().__init_subclass__(**kwargs)
        # make a registry of subclasses as they are defined
        if register:
            cls.classmap[cls._name_of(cls.__name__)] = cls

    def __init__(self, scenario, **params):
        super().__init__()
        self.policy_name = self._name_of(self.__class__.__name__)
        self.scenario = scenario
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise SamError(
                f"{self.policy_name}: unknown parameters: {', '.join(sorted(unknown))}"
            )
        self.params = {**self.defaults, **params}

    @classmethod
    def _name_of(cls, name: str) -> str:
        """Make an underscored, lowercase form of the given class name."""
        name = re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1_\2", name)
        name = re.sub(r"([a-z\d])([A-Z])", r"\1_\2", name)
        name = name.replace("-", "_")
        return name.lower()

    @classmethod
    def lookup(cls, kind):
        """the policy class registered as kind, or by its number like 'b7'"""
        kind = str(kind).lower()
        try:
            return cls.classmap[kind]
        except KeyError:
            pass
        for name, clss in cls.classmap.items():
            if name.split("_", 1)[0] == kind:
                return clss
        raise SamError(f"{kind}: unknown policy")

    @classmethod
    def create(cls, kind, scenario, params=None):
        return cls.lookup(kind)(scenario, **dict(params or {}))

    @property
    def pool(self):
        """the pool this policy allocates, plans are validated against it"""
        return self.scenario.pool

    @property
    def metadata(self):
        data = {"policy": self.policy_name, "params": dict(self.params)}
        if self.note:
            data["note"] = self.note
        return data

    def initial_plan(self):
        """the plan in force before the first decision"""
        return allocate_slack(self.pool)

    @abc.abstractmethod
    def decide(self, observations, current, cycle):
        """return (plan, DecisionInfo) for the cycle after this one"""


class StaticPolicy(PolicyBase, register=False):
    """Base for policies whose plan never changes"""

    @abc.abstractmethod
    def static_plan(self):
        """the plan to hold"""

    def initial_plan(self):
        return self.static_plan()

    def decide(self, observations, current, cycle):
        return self.static_plan(), DecisionInfo(global_scan=False)
