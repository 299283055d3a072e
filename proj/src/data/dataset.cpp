#include "ifl/data/dataset.hpp"

#include "ifl/data/idx.hpp"
#include "ifl/errors.hpp"

namespace ifl::data {

void validate(const Dataset& ds) {
    if (ds.images.rank() != 4)
        throw DataError("dataset: images " + shape_str(ds.images.shape) + " are not rank 4");
    if (ds.images.dim(0) != static_cast<Index>(ds.labels.size()))
        throw DataError("dataset: " + std::to_string(ds.images.dim(0)) + " images vs " +
                        std::to_string(ds.labels.size()) + " labels");
    for (int y : ds.labels)
        if (y < 0 || y >= kNumClasses)
            throw DataError("dataset: label " + std::to_string(y) + " out of range");
    if (ds.images.numel() > 0) {
        if (!ds.images.all_finite()) throw DataError("dataset: non-finite pixel values");
        if (ds.images.data.minCoeff() < 0.0f || ds.images.data.maxCoeff() > 1.0f)
            throw DataError("dataset: pixel values outside [0, 1]");
    }
}

Dataset take_prefix(const Dataset& ds, Index n) {
    if (n <= 0 || n >= ds.size()) return ds;
    Dataset out;
    const Index per_sample = ds.images.numel() / ds.size();
    out.images.shape = ds.images.shape;
    out.images.shape[0] = n;
    out.images.data = ds.images.data.head(n * per_sample);
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
    return out;
}

void gather(const Dataset& ds, std::span<const int> indices, Tensor<float>& x,
            std::vector<int>& y) {
    const Index per_sample = ds.images.numel() / ds.size();
    Shape shape = ds.images.shape;
    shape[0] = static_cast<Index>(indices.size());
    if (x.shape != shape) x = Tensor<float>::zeros(shape);
    y.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int row = indices[i];
        if (row < 0 || row >= ds.size())
            throw DataError("gather: index " + std::to_string(row) + " out of range");
        x.data.segment(static_cast<Index>(i) * per_sample, per_sample) =
            ds.images.data.segment(static_cast<Index>(row) * per_sample, per_sample);
        y[i] = ds.labels[static_cast<std::size_t>(row)];
    }
}

Dataset load_split(const std::filesystem::path& dir, bool train) {
    const char* images_name = train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
    const char* labels_name = train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
    Dataset ds;
    ds.images = parse_idx_images(read_file_bytes(dir / images_name));
    ds.labels = parse_idx_labels(read_file_bytes(dir / labels_name));
    validate(ds);
    return ds;
}

}  // namespace ifl::data
