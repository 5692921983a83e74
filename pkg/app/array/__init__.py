from app.array.geometry import (
    ArrayGeometry,
    aperture,
    element_distances,
    fraunhofer_distance,
    steering_matrix,
    steering_vector,
)


__all__ = [
    "ArrayGeometry",
    "aperture",
    "element_distances",
    "fraunhofer_distance",
    "steering_matrix",
    "steering_vector",
]
