"""The nine diagnostic categories and their canonical order.

The order below is the single source of truth for every file header,
confidence matrix column, weight vector and report column in this
package. Nothing may reorder it.
"""

from enum import IntEnum


class Category(IntEnum):
    """Diagnostic category, indexed by canonical column position."""

    MEL = 0  # melanoma
    NV = 1  # melanocytic nevus
    BCC = 2  # basal cell carcinoma
    AK = 3  # actinic keratosis
    BKL = 4  # benign keratosis
    DF = 5  # dermatofibroma
    VASC = 6  # vascular lesion
    SCC = 7  # squamous cell carcinoma
    UNK = 8  # none of the others

    @classmethod
    def from_name(cls, name: str) -> "Category":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown category {name!r}") from None


CATEGORY_NAMES: tuple[str, ...] = tuple(c.name for c in Category)
N_CATEGORIES: int = len(CATEGORY_NAMES)
