#pragma once

#include "rwu/cli.hpp"
#include "rwu/config.hpp"
#include "rwu/csv.hpp"
#include "rwu/diagnostics.hpp"
#include "rwu/errors.hpp"
#include "rwu/kernel.hpp"
#include "rwu/local_time.hpp"
#include "rwu/parallel.hpp"
#include "rwu/random.hpp"
#include "rwu/sheet.hpp"
#include "rwu/stable.hpp"
#include "rwu/ustat.hpp"
#include "rwu/version.hpp"
#include "rwu/walk.hpp"
