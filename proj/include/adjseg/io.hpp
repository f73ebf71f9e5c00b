#pragma once

#include <filesystem>

#include "adjseg/labels.hpp"
#include "adjseg/tensor.hpp"

namespace adjseg {

// FTF1: the 4 magic bytes "FTF1", three little-endian uint64 dims (C,H,W),
// then C*H*W little-endian doubles in (channel,row,column) order.
void write_ftf(const std::filesystem::path& path, const FeatureField& field);
FeatureField read_ftf(const std::filesystem::path& path);

// Kernel stacks are stored as FTF1 fields of shape (out*in, kh, kw).
void write_kernel(const std::filesystem::path& path, const ConvKernelStack& k);
ConvKernelStack read_kernel(const std::filesystem::path& path, std::size_t out_channels);

// LBL1 text files. Header "LBL1 H W". A selection set follows with one
// "row col class" line per entry; a class map follows with H lines of W
// ids, -1 for unlabeled.
void write_selection(const std::filesystem::path& path, const SelectionSet& q, std::size_t height,
                     std::size_t width);
SelectionSet read_selection(const std::filesystem::path& path);
void write_class_map(const std::filesystem::path& path, const ClassMap& map);
ClassMap read_class_map(const std::filesystem::path& path);

}  // namespace adjseg
