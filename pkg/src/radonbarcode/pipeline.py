"""Image to barcode in one call: normalize, project, binarize."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .barcode import DEFAULT_WINDOW, Barcode, Encoder, encode_minmax, encode_threshold
from .imaging import as_gray_image, load_grayscale, normalize
from .radon import project


@dataclass(frozen=True)
class EncodingSettings:
    encoder: Encoder = Encoder.MINMAX
    num_angles: int = 8
    image_side: int = 32
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        object.__setattr__(self, "encoder", Encoder(self.encoder))
        if self.encoder is Encoder.THRESHOLD:
            # the window plays no part in thresholding
            object.__setattr__(self, "window", 0)

    @classmethod
    def from_config(cls, config: tuple) -> "EncodingSettings":
        encoder, num_angles, image_side, window = config
        return cls(encoder, num_angles, image_side, window or DEFAULT_WINDOW)

    @property
    def config(self) -> tuple:
        return (self.encoder, self.num_angles, self.image_side, self.window)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["encoder"] = self.encoder.value
        return d


def encode_image(img, settings: EncodingSettings = EncodingSettings()) -> Barcode:
    img = normalize(as_gray_image(img), settings.image_side, settings.image_side)
    ps = project(img, settings.num_angles)
    if settings.encoder is Encoder.THRESHOLD:
        return encode_threshold(ps)
    return encode_minmax(ps, settings.window)


def encode_file(path, settings: EncodingSettings = EncodingSettings()) -> Barcode:
    return encode_image(load_grayscale(path), settings)
