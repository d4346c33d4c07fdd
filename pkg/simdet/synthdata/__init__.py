"""Synthetic glyph and keyword datasets, class splits and episode construction."""

from simdet.synthdata.corpus import CorpusSource, ImageSource, load_image_dataset
from simdet.synthdata.dataset import Dataset, EpisodeSet, build_dataset, nway_set_name, read_dataset, write_dataset
from simdet.synthdata.episodes import ImageTrack, SequenceTrack, build_nway_eval, build_training_pairs
from simdet.synthdata.glyphs import GlyphSource, render_glyph
from simdet.synthdata.sequences import SequenceSource, gen_sequence_target, make_template
from simdet.synthdata.splits import SplitSpec, make_split
from simdet.synthdata.tiling import tile_target

__all__ = [
    "CorpusSource",
    "Dataset",
    "EpisodeSet",
    "GlyphSource",
    "ImageSource",
    "ImageTrack",
    "SequenceSource",
    "SequenceTrack",
    "SplitSpec",
    "build_dataset",
    "build_nway_eval",
    "build_training_pairs",
    "gen_sequence_target",
    "load_image_dataset",
    "make_split",
    "make_template",
    "nway_set_name",
    "read_dataset",
    "render_glyph",
    "tile_target",
    "write_dataset",
]
