#include "refgov/error.hpp"

namespace refgov {

DivergedTrajectory::DivergedTrajectory(const std::string& what, int step)
    : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

TrainingDiverged::TrainingDiverged(const std::string& what, int epoch)
    : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

}  // namespace refgov
