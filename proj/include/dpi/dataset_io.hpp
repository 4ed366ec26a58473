#pragma once

#include <stdexcept>
#include <string>

#include "dpi/dataset.hpp"

namespace dpi {

struct DatasetFormatError : std::runtime_error {
    explicit DatasetFormatError(const std::string& what) : std::runtime_error(what) {}
};

// Writes train.csv / validation.csv / test.csv plus dataset_manifest.json
// into dir (created if absent). Floats use shortest round-trip formatting,
// so read_dataset(write_dataset(d)) reproduces d bit for bit.
void write_dataset(const BuiltDataset& ds, const std::string& dir);

BuiltDataset read_dataset(const std::string& dir);

}
