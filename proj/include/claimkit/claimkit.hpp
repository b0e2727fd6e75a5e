#pragma once

#include "claimkit/corpus.hpp"
#include "claimkit/ensemble.hpp"
#include "claimkit/entailment.hpp"
#include "claimkit/error.hpp"
#include "claimkit/evalreport.hpp"
#include "claimkit/features.hpp"
#include "claimkit/gridsearch.hpp"
#include "claimkit/metrics.hpp"
#include "claimkit/simmetrics.hpp"
#include "claimkit/textrep.hpp"
