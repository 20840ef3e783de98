#pragma once

#include "ttlforge/error.hpp"
#include "ttlforge/core/types.hpp"
#include "ttlforge/core/wauc.hpp"
#include "ttlforge/core/selection.hpp"
#include "ttlforge/core/score_table_csv.hpp"
#include "ttlforge/env/registry.hpp"
#include "ttlforge/backend/scripted.hpp"
#include "ttlforge/backend/retry.hpp"
#include "ttlforge/backend/remote.hpp"
#include "ttlforge/agents/actor.hpp"
#include "ttlforge/agents/meta_agent.hpp"
#include "ttlforge/agents/proposer.hpp"
#include "ttlforge/agents/policy.hpp"
#include "ttlforge/agents/baselines.hpp"
#include "ttlforge/ttl/session.hpp"
#include "ttlforge/metatrain/trainer.hpp"
#include "ttlforge/store/resume.hpp"
#include "ttlforge/cli/commands.hpp"
