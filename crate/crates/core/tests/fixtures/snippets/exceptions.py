import os, sys


def read(path: str, mode: str = 'r') -> str:
    try:
        with open(path, mode) as fh:
            return fh.read()
    except (IOError, OSError) as exc:
        raise RuntimeError('cannot read %s' % path) from exc
    except Exception:
        assert False, 'unreachable'
    finally:
        del path


def main(*args, **kwargs):
    global COUNT
    value: int = 3
    result = read(
        os.path.join(
            sys.argv[1],
            'data.txt',
        )
    )
    return result, value
