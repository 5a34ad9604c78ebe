import json
import os.path as osp
from collections import OrderedDict

def load_config(path, defaults=None):
    if defaults is None:
        defaults = {}
    merged = dict(defaults)
    try:
        handle = open(path)
    except IOError as err:
        print("cannot open", path, err)
        raise
    try:
        data = json.load(handle)
        merged.update(data)
    except ValueError:
        merged["corrupt"] = True
    finally:
        handle.close()
    return merged

def dump_config(config, path):
    with open(path, "w") as handle:
        json.dump(config, handle)

def config_dir(path):
    assert path, "path must be non-empty"
    head = osp.dirname(path)
    if not head:
        raise ValueError("no directory component")
    return head
