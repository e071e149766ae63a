"""Linear LIF spiking neurons and their exact parameter mapping to ReLU units."""

from . import _backend
from .coding import CodingConfig, SpikeTrain, decode, encode, weighted_charge_sequence
from .errors import (ChecksumError, ConversionError, DomainError, GridMismatchError,
                     LifmapError, ManifestError, MissingTensorError, ShapeError,
                     TensorShapeError, UndefinedCorrelationError)
from .mapping import (ReluParams, bias_from_params, min_firing_frequency, params_from_relu,
                      relu_an, slope_from_params)
from .network import (Conv, Dense, Flatten, MaxPool, NetworkSpec, RunResult, SimConfig,
                      ann_forward, convert, run_snn)
from .neuron import (MembraneTrace, NeuronParams, NeuronState, ResetMode, closed_form_mp,
                     decay_factor, run, step)
from .weights import WeightsBundle, load_weights, save_weights

__version__ = "0.1.0"
BACKEND = _backend.name
