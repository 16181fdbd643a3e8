import numpy as np

from network.mlp import flatten_params, unflatten_params
from utils.files import read_json, write_csv, write_json


def mlp_to_dict(net):
    return {
        "layer_sizes": list(net.layer_sizes),
        "params": [float(v) for v in flatten_params(net)],
    }


def mlp_from_dict(payload):
    return unflatten_params(payload["layer_sizes"], np.array(payload["params"], dtype=np.float64))


def save_checkpoint(net, path, extra=None):
    payload = {"network": mlp_to_dict(net)}
    if extra:
        payload.update(extra)
    write_json(path, payload)


def load_checkpoint(path):
    """Returns (Mlp, the remaining payload)."""
    payload = read_json(path)
    net = mlp_from_dict(payload.pop("network"))
    return net, payload


def write_trace(path, trace):
    write_csv(path, ["step", "loss", "lr", "batch_size"], ([r.step, r.loss, r.lr, r.batch_size] for r in trace))
