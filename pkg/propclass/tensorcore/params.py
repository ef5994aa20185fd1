# -*- coding: utf-8 -*-

"""
propclass.tensorcore.params
~~~~~~~~~~~~~~~~~~~~~~~~~~~

Named trainable parameters.
"""

import collections

import numpy as np

from ..exceptions import ConfigError, MissingGrad, ShapeMismatch
from .tensor import Tensor


class ParamStore(object):
    """An ordered mapping of parameter name to leaf tensor.

    Matrices are drawn from uniform(-bound, bound) by a generator owned by the store, so creating the same
    parameters in the same order from the same seed gives identical values.
    """

    def __init__(self, rng=None):
        """Initialize the ParamStore object.

        :param rng: The initialization generator.
        :type rng: numpy.random.Generator or None
        """
        self._params = collections.OrderedDict()
        self._rng = rng if rng is not None else np.random.default_rng(0)

    def __contains__(self, name):
        return name in self._params

    def __getitem__(self, name):
        return self._params[name]

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def __repr__(self):
        return "ParamStore(params={0}, values={1})".format(len(self), self.num_values())

    def names(self):
        return sorted(self._params)

    def items(self):
        return [(name, self._params[name]) for name in self.names()]

    def add(self, name, data):
        if name in self._params:
            raise ConfigError(name, "parameter already exists")
        tensor = Tensor(data, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def uniform(self, name, shape, bound):
        return self.add(name, self._rng.uniform(-bound, bound, size=shape))

    def zeros(self, name, shape):
        return self.add(name, np.zeros(shape))

    def ones(self, name, shape):
        return self.add(name, np.ones(shape))

    def full(self, name, shape, value):
        return self.add(name, np.full(shape, float(value)))

    def num_values(self):
        return int(sum(p.size for p in self._params.values()))

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.zero_grad()

    def grad(self, name):
        tensor = self._params[name]
        if tensor.grad is None:
            raise MissingGrad(name)
        return tensor.grad

    def groups(self):
        """Parameter names grouped by their component prefix, the text before the first dot."""
        grouped = collections.OrderedDict()
        for name in self._params:
            grouped.setdefault(name.split(".", 1)[0], []).append(name)
        return grouped

    def state_dict(self):
        return collections.OrderedDict((name, tensor.data.copy()) for name, tensor in self.items())

    def load_state_dict(self, state):
        """Overwrites parameter values in place. Names and shapes must match exactly."""
        missing = set(self._params) ^ set(state)
        if missing:
            raise ConfigError(sorted(missing)[0], "parameter names differ")
        for name, tensor in self._params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ShapeMismatch("load_state_dict", tensor.shape, value.shape)
            tensor.data = value.copy()
