#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dae/image.hpp"
#include "dae/training.hpp"

namespace dae {

/// `epoch,train_loss,val_loss` with one row per epoch.
std::string history_csv(const TrainHistory& h);
void write_history_csv(const TrainHistory& h, const std::filesystem::path& path);

/// Line chart of training and validation loss against epoch.
std::string loss_curve_svg(const TrainHistory& h, const std::string& title);
void write_loss_svg(const TrainHistory& h, const std::string& title, const std::filesystem::path& path);

/// Grid of images, one vector per row, separated by a `gap`-pixel white border.
Image montage(const std::vector<std::vector<Image>>& rows, int gap = 2);

}  // namespace dae
