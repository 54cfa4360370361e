import hashlib
import numpy as np
from typing import Optional


__all__ = ["RngStream", "substream"]


class RngStream(object):
    """
    Reproducible random stream keyed by a master seed and a string label.

    The same (master_seed, stream_label) pair always yields the same draw
    sequence. Instances are single-owner; derive a `substream` for every
    independent consumer instead of sharing one.
    """

    def __init__(self, master_seed: int, stream_label: Optional[str] = "root"):
        if not 0 <= int(master_seed) < 2 ** 64:
            raise ValueError(
                f"master_seed must be a 64-bit unsigned integer, got {master_seed}"
            )
        self.__master_seed = int(master_seed)
        self.__stream_label = str(stream_label)
        self.__generator = None

    @property
    def master_seed(self) -> int:
        return self.__master_seed

    @property
    def stream_label(self) -> str:
        return self.__stream_label

    @property
    def generator(self) -> np.random.Generator:
        """
        Lazily created numpy generator backing this stream.
        """
        if self.__generator is None:
            digest = hashlib.blake2b(
                self.__stream_label.encode("utf-8"),
                digest_size=16
            ).digest()
            words = np.frombuffer(digest, dtype=np.uint32).tolist()
            seed_sequence = np.random.SeedSequence(
                entropy=[self.__master_seed & 0xFFFFFFFF,
                         self.__master_seed >> 32,
                         *words]
            )
            self.__generator = np.random.Generator(np.random.PCG64(seed_sequence))
        return self.__generator

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.__master_seed}, stream_label={self.__stream_label!r})"


def substream(rng: RngStream, label: str) -> RngStream:
    """
    Derive an independent child stream.

    Args:
        rng (RngStream): Parent stream; its generator state is not consumed.
        label (str): Child label, appended to the parent label.

    Returns:
        RngStream: Stream keyed by (master_seed, "<parent>/<label>").
    """
    return RngStream(
        master_seed=rng.master_seed,
        stream_label=f"{rng.stream_label}/{label}"
    )
