#pragma once

#include "omsense/closed_form.hpp"
#include "omsense/constants.hpp"
#include "omsense/io.hpp"
#include "omsense/model.hpp"
#include "omsense/params.hpp"
#include "omsense/spectra.hpp"
#include "omsense/sweep.hpp"
