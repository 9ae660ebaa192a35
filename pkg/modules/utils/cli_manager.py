import argparse
from typing import List


def str2bool(v):
    if isinstance(v, bool):
        return v
    if v.lower() in ('yes', 'true', 't', 'y', '1'):
        return True
    elif v.lower() in ('no', 'false', 'f', 'n', '0'):
        return False
    else:
        raise argparse.ArgumentTypeError('Boolean value expected.')


def str2floats(v) -> List[float]:
    """Parse "0.1,0.2,0.3" (or a single number) into a list of floats."""
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    try:
        return [float(x) for x in str(v).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'Comma separated numbers expected, got "{v}".')


def str2ints(v) -> List[int]:
    """Parse "3,5,7" into a list of ints."""
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    try:
        return [int(x) for x in str(v).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'Comma separated integers expected, got "{v}".')
